//! Tumbling target: prescribed body rates, 3-2-1 attitude propagation and the
//! desired LOS / attitude states it induces on the chaser.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::attitude::euler_rates;
use crate::error::{Error, Result};
use crate::wrap::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionMode {
    Constant,
    Sinusoidal,
}

/// Prescribed target body rates and initial attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMotion {
    pub mode: MotionMode,
    /// Body rates for [`MotionMode::Constant`] (rad/s).
    pub omega_const: [f64; 3],
    /// Amplitudes for [`MotionMode::Sinusoidal`] (rad/s).
    pub amp: [f64; 3],
    /// Periods for [`MotionMode::Sinusoidal`] (s).
    pub periods: [f64; 3],
    /// Initial (roll, pitch, yaw) of the target (rad).
    pub initial_attitude: [f64; 3],
}

impl TargetMotion {
    pub fn constant(omega: [f64; 3], initial_attitude: [f64; 3]) -> Self {
        Self {
            mode: MotionMode::Constant,
            omega_const: omega,
            amp: [0.0; 3],
            periods: [1.0; 3],
            initial_attitude,
        }
    }

    pub fn sinusoidal(amp: [f64; 3], periods: [f64; 3], initial_attitude: [f64; 3]) -> Self {
        Self {
            mode: MotionMode::Sinusoidal,
            omega_const: [0.0; 3],
            amp,
            periods,
            initial_attitude,
        }
    }

    pub fn at_rest() -> Self {
        Self::constant([0.0; 3], [0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64; 3]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.omega_const) && finite(&self.amp) && finite(&self.initial_attitude)) {
            return Err(Error::NonFinite("target"));
        }
        if self.mode == MotionMode::Sinusoidal && self.periods.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Validation("sinusoidal target periods must be > 0".into()));
        }
        if self.initial_attitude[1].abs() >= PI / 2.0 {
            return Err(Error::Validation("target initial pitch must lie inside (-90, 90) deg".into()));
        }
        Ok(())
    }
}

/// Target body rates at time `t`.
pub fn target_rates(motion: &TargetMotion, t: f64) -> Vector3<f64> {
    match motion.mode {
        MotionMode::Constant => Vector3::from(motion.omega_const),
        MotionMode::Sinusoidal => {
            Vector3::from_fn(|i, _| motion.amp[i] * (2.0 * PI * t / motion.periods[i]).sin())
        }
    }
}

/// One RK4 step of the Euler kinematics with body rates held at `rates`.
pub fn propagate_target(att: &Vector3<f64>, rates: &Vector3<f64>, dt: f64) -> Result<Vector3<f64>> {
    crate::integrator::rk4_step(euler_rates, att, rates, dt)
}

/// One RK4 step of the Euler kinematics with the body rates evaluated at the
/// stage times of `motion`. Roll and yaw are returned wrapped into `[-pi, pi)`.
pub fn propagate_target_motion(motion: &TargetMotion, att: &Vector3<f64>, t: f64, dt: f64) -> Result<Vector3<f64>> {
    let f = |a: &Vector3<f64>, tau: f64| euler_rates(a, &target_rates(motion, tau));
    let k1 = f(att, t)?;
    let k2 = f(&(att + k1 * (0.5 * dt)), t + 0.5 * dt)?;
    let k3 = f(&(att + k2 * (0.5 * dt)), t + 0.5 * dt)?;
    let k4 = f(&(att + k3 * dt), t + dt)?;
    let next = att + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    Ok(Vector3::new(wrap_angle(next[0]), next[1], wrap_angle(next[2])))
}

/// Desired chaser LOS state and attitude at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredPose {
    pub x_dp: Vector6<f64>,
    pub x_da: Vector6<f64>,
}

/// Desired pose for a target attitude `att` rotating with body rates `w`.
///
/// The LOS reference sits on the docking axis at range `rho_d`: elevation
/// follows the target pitch and azimuth the negated target yaw. Rate slots
/// carry the matching `rho * angle_rate` products. The attitude reference is
/// the target attitude and body rates.
pub fn desired_pose(att: &Vector3<f64>, w: &Vector3<f64>, rho_d: f64) -> Result<DesiredPose> {
    let rates = euler_rates(att, w)?;
    Ok(DesiredPose {
        x_dp: Vector6::new(rho_d, att[1], wrap_angle(-att[2]), 0.0, rho_d * rates[1], -rho_d * rates[2]),
        x_da: Vector6::new(att[0], att[1], att[2], w[0], w[1], w[2]),
    })
}

/// Target attitudes and desired poses at `t_k + i*ts` for `i = 0..=np`.
/// Index 0 is the current instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetHorizon {
    pub attitudes: Vec<Vector3<f64>>,
    pub poses: Vec<DesiredPose>,
}

pub fn desired_horizon(
    motion: &TargetMotion,
    att_k: &Vector3<f64>,
    t_k: f64,
    np: usize,
    ts: f64,
    rho_d: f64,
) -> Result<TargetHorizon> {
    let mut attitudes = Vec::with_capacity(np + 1);
    let mut poses = Vec::with_capacity(np + 1);
    let mut att = *att_k;
    for i in 0..=np {
        let t = t_k + i as f64 * ts;
        if i > 0 {
            att = propagate_target_motion(motion, &att, t - ts, ts)?;
        }
        attitudes.push(att);
        poses.push(desired_pose(&att, &target_rates(motion, t), rho_d)?);
    }
    Ok(TargetHorizon { attitudes, poses })
}
