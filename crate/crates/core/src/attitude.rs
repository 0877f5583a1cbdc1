//! Chaser attitude: 3-2-1 Euler kinematics, Euler rigid-body equations and
//! reaction wheels under the linearised wheel relation
//! `w_dot_i = -(Jw_i / J_i) * alpha_ddot_i`.
//!
//! State ordering: `[phi, theta, psi, w1, w2, w3]`; input: wheel accelerations.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::los::check_gimbal;

/// Principal inertias of the chaser and of its three reaction wheels (kg m^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaParams {
    pub j: [f64; 3],
    pub jw: [f64; 3],
}

impl InertiaParams {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.j[i] > 0.0 && self.jw[i] > 0.0) {
                return Err(Error::Validation(format!("inertias must be positive (axis {})", i + 1)));
            }
            if self.jw[i] >= self.j[i] {
                return Err(Error::Validation(format!(
                    "wheel inertia {} must be smaller than body inertia {} (axis {})",
                    self.jw[i],
                    self.j[i],
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Input gains `(Jw_i^2 - J_i Jw_i) / J_i^2`.
    pub fn input_gains(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| (self.jw[i] * self.jw[i] - self.j[i] * self.jw[i]) / (self.j[i] * self.j[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeState {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl AttitudeState {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.phi, self.theta, self.psi, self.w1, self.w2, self.w3)
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self { phi: x[0], theta: x[1], psi: x[2], w1: x[3], w2: x[4], w3: x[5] }
    }
}

/// Commanded wheel angular accelerations (rad/s^2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelInput {
    pub u_phi: f64,
    pub u_theta: f64,
    pub u_psi: f64,
}

impl WheelInput {
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u_phi, self.u_theta, self.u_psi)
    }

    pub fn from_vector(u: &Vector3<f64>) -> Self {
        Self { u_phi: u[0], u_theta: u[1], u_psi: u[2] }
    }
}

/// Body-rate to Euler-rate map of the 3-2-1 sequence.
pub fn kinematics_matrix(phi: f64, theta: f64) -> Result<Matrix3<f64>> {
    check_gimbal("theta", theta)?;
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Ok(Matrix3::new(
        1.0,
        sp * st / ct,
        cp * st / ct,
        0.0,
        cp,
        -sp,
        0.0,
        sp / ct,
        cp / ct,
    ))
}

/// Euler angle rates `(phi_dot, theta_dot, psi_dot)` for the given angles and
/// body rates.
pub fn euler_rates(angles: &Vector3<f64>, body_rates: &Vector3<f64>) -> Result<Vector3<f64>> {
    Ok(kinematics_matrix(angles[0], angles[1])? * body_rates)
}

pub fn attitude_rate(x: &Vector6<f64>, u: &Vector3<f64>, inertia: &InertiaParams) -> Result<Vector6<f64>> {
    let [j1, j2, j3] = inertia.j;
    let w = x.fixed_rows::<3>(3).into_owned();
    let angle_rates = euler_rates(&x.fixed_rows::<3>(0).into_owned(), &w)?;
    let g = inertia.input_gains();
    Ok(Vector6::new(
        angle_rates[0],
        angle_rates[1],
        angle_rates[2],
        (j2 - j3) / j1 * w[1] * w[2] + g[0] * u[0],
        (j3 - j1) / j2 * w[0] * w[2] + g[1] * u[1],
        (j1 - j2) / j3 * w[0] * w[1] + g[2] * u[2],
    ))
}

/// Attitude derivative plus the Euler-angle accelerations used for the
/// sampling signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeDerivative {
    pub dx: Vector6<f64>,
    /// `(phi_ddot, theta_ddot, psi_ddot)`, forward-differenced over `ts`.
    pub accels: Vector3<f64>,
}

pub fn attitude_rhs(
    x: &AttitudeState,
    u: &WheelInput,
    inertia: &InertiaParams,
    ts: f64,
) -> Result<AttitudeDerivative> {
    let xv = x.to_vector();
    let uv = u.to_vector();
    let dx = attitude_rate(&xv, &uv, inertia)?;
    let ahead = xv + dx * ts;
    let rates_now = dx.fixed_rows::<3>(0).into_owned();
    let rates_ahead = euler_rates(&ahead.fixed_rows::<3>(0).into_owned(), &ahead.fixed_rows::<3>(3).into_owned())?;
    Ok(AttitudeDerivative { dx, accels: (rates_ahead - rates_now) / ts })
}

/// State-dependent matrices `(A, B)` with `dx = A(x) x + B u`. The bilinear
/// Euler coupling terms are placed as `A(4,5) = x6 (J2-J3)/J1`,
/// `A(5,6) = x4 (J3-J1)/J2`, `A(6,4) = x5 (J1-J2)/J3`.
pub fn attitude_jacobians(x: &AttitudeState, inertia: &InertiaParams) -> Result<(Matrix6<f64>, Matrix6x3<f64>)> {
    let kin = kinematics_matrix(x.phi, x.theta)?;
    let [j1, j2, j3] = inertia.j;
    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&kin);
    a[(3, 4)] = x.w3 * (j2 - j3) / j1;
    a[(4, 5)] = x.w1 * (j3 - j1) / j2;
    a[(5, 3)] = x.w2 * (j1 - j2) / j3;
    Ok((a, input_matrix(inertia)))
}

pub fn input_matrix(inertia: &InertiaParams) -> Matrix6x3<f64> {
    let g = inertia.input_gains();
    let mut b = Matrix6x3::zeros();
    for i in 0..3 {
        b[(3 + i, i)] = g[i];
    }
    b
}
