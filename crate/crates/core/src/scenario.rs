//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[orbit]`, `[inertia]`,
//! `[target]`, `[mpc.position]`, `[mpc.attitude]`, `[limits]`, `[initial]` and
//! `[run]`. Every key is optional and falls back to the reference tuning of
//! [`Scenario::case1`]. Units are SI with angles in radians; each angle key
//! also has a `_deg` twin, converted once at load time. Giving both forms of
//! the same angle, or any key not listed below, is an error.
//!
//! ```toml
//! [orbit]
//! a = 1.0e7            # semi-major axis (m)
//! e = 0.3
//! f0_deg = 0.0         # initial true anomaly
//! mu = 3.986004418e14  # (m^3/s^2)
//!
//! [inertia]
//! j = [50.0, 35.0, 40.0]   # body principal inertias (kg m^2)
//! jw = [5.0, 5.0, 5.0]     # wheel inertias (kg m^2)
//!
//! [target]
//! motion = "constant"                    # or "sinusoidal"
//! omega = [0.02, 0.015, 0.02]            # constant body rates (rad/s)
//! amp = [0.04, 0.04, 0.04]               # sinusoidal amplitudes (rad/s)
//! periods = [200.0, 100.0, 66.6667]      # sinusoidal periods (s)
//! initial_attitude_deg = [20.0, 50.0, 10.0]
//! rho_d = 6.0                            # docking range (m)
//!
//! [mpc.position]   # same keys under [mpc.attitude]
//! np = 30
//! nc = 15
//! ts = 0.1                                  # (s)
//! q = [1000.0, 30000.0, 30000.0, 0.0, 0.0, 0.0]
//! q_per_range = [0.0, 0.0, 0.0, 1000.0, 3000.0, 3000.0]   # divided by rho
//! p = [100.0, 100.0, 100.0]
//! ws = [0.4, 0.25, 0.25]
//!
//! [limits]
//! umax_p = [3.0, 3.0, 3.0]     # (m/s^2)
//! umax_a = [1.0, 1.0, 1.0]     # (rad/s^2)
//! r_safe = 6.0                 # (m)
//! gamma_e_deg = 30.0
//! gamma_f_deg = 30.0
//! wrap_delta_deg = 0.5
//! collision_backoff = 1e-4     # (m)
//!
//! [initial]
//! rho = 80.0
//! eps_deg = 25.0
//! beta_deg = -10.0
//! rho_dot = 0.0
//! rho_eps_dot = 0.0            # rho * eps_dot (m/s)
//! rho_beta_dot = 0.0           # rho * beta_dot (m/s)
//! attitude_deg = [20.0, 25.0, -10.0]
//! body_rates = [0.0, 0.0, 0.0] # (rad/s)
//!
//! [run]
//! duration = 500.0             # (s)
//! mode = "sampling"            # or "standard"
//! seed = 0
//! angle_threshold_deg = 0.5
//! range_threshold = 0.05       # (m)
//! steady_window = 100.0        # (s)
//! qp_tol = 1e-8
//! qp_max_iter = 200
//! slack_weight = 1e6
//! ```

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::attitude::AttitudeState;
use crate::error::{Error, Result};
use crate::los::LosState;
use crate::sim::{Mode, MpcTuning, Scenario};
use crate::target::{MotionMode, TargetMotion};

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    orbit: OrbitSection,
    #[serde(default)]
    inertia: InertiaSection,
    #[serde(default)]
    target: TargetSection,
    #[serde(default)]
    mpc: MpcSection,
    #[serde(default)]
    limits: LimitsSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f0_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InertiaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    j: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jw: Option<[f64; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    motion: Option<MotionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amp: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    periods: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_attitude: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_attitude_deg: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_d: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MpcSection {
    #[serde(default)]
    position: TuningSection,
    #[serde(default)]
    attitude: TuningSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuningSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    np: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ts: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<[f64; 6]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_per_range: Option<[f64; 6]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ws: Option<[f64; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    umax_p: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    umax_a: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_safe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_e_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_f_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wrap_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wrap_delta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    collision_backoff: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_dot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_eps_dot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_beta_dot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attitude: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attitude_deg: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    body_rates: Option<[f64; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle_threshold_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qp_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qp_max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack_weight: Option<f64>,
}

fn angle(name: &str, rad: Option<f64>, deg: Option<f64>, default: f64) -> Result<f64> {
    match (rad, deg) {
        (Some(_), Some(_)) => Err(Error::Validation(format!("give either `{name}` or `{name}_deg`, not both"))),
        (Some(r), None) => Ok(r),
        (None, Some(d)) => Ok(d.to_radians()),
        (None, None) => Ok(default),
    }
}

fn angles(name: &str, rad: Option<[f64; 3]>, deg: Option<[f64; 3]>, default: [f64; 3]) -> Result<[f64; 3]> {
    match (rad, deg) {
        (Some(_), Some(_)) => Err(Error::Validation(format!("give either `{name}` or `{name}_deg`, not both"))),
        (Some(r), None) => Ok(r),
        (None, Some(d)) => Ok(d.map(f64::to_radians)),
        (None, None) => Ok(default),
    }
}

fn tuning(sec: &TuningSection, d: MpcTuning) -> MpcTuning {
    MpcTuning {
        np: sec.np.unwrap_or(d.np),
        nc: sec.nc.unwrap_or(d.nc),
        ts: sec.ts.unwrap_or(d.ts),
        q: sec.q.unwrap_or(d.q),
        q_per_range: sec.q_per_range.unwrap_or(d.q_per_range),
        p: sec.p.unwrap_or(d.p),
        ws: sec.ws.unwrap_or(d.ws),
    }
}

fn target(sec: &TargetSection) -> Result<TargetMotion> {
    let motion = sec.motion.unwrap_or(MotionMode::Constant);
    let d = match motion {
        MotionMode::Constant => Scenario::case1().target,
        MotionMode::Sinusoidal => Scenario::case2().target,
    };
    Ok(TargetMotion {
        mode: motion,
        omega_const: sec.omega.unwrap_or(d.omega_const),
        amp: sec.amp.unwrap_or(d.amp),
        periods: sec.periods.unwrap_or(d.periods),
        initial_attitude: angles("initial_attitude", sec.initial_attitude, sec.initial_attitude_deg, d.initial_attitude)?,
    })
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let d = Scenario::case1();
        let o = &self.orbit;
        let l = &self.limits;
        let i = &self.initial;
        let r = &self.run;
        let mut s = Scenario {
            orbit: crate::orbit::OrbitParams {
                a: o.a.unwrap_or(d.orbit.a),
                e: o.e.unwrap_or(d.orbit.e),
                f0: angle("f0", o.f0, o.f0_deg, d.orbit.f0)?,
                mu: o.mu.unwrap_or(d.orbit.mu),
            },
            inertia: crate::attitude::InertiaParams {
                j: self.inertia.j.unwrap_or(d.inertia.j),
                jw: self.inertia.jw.unwrap_or(d.inertia.jw),
            },
            target: target(&self.target)?,
            rho_d: self.target.rho_d.unwrap_or(d.rho_d),
            tuning_p: tuning(&self.mpc.position, d.tuning_p),
            tuning_a: tuning(&self.mpc.attitude, d.tuning_a),
            limits: crate::constraints::ConstraintParams {
                umax_p: l.umax_p.unwrap_or(d.limits.umax_p),
                umax_a: l.umax_a.unwrap_or(d.limits.umax_a),
                r_safe: l.r_safe.unwrap_or(d.limits.r_safe),
                gamma_e: angle("gamma_e", l.gamma_e, l.gamma_e_deg, d.limits.gamma_e)?,
                gamma_f: angle("gamma_f", l.gamma_f, l.gamma_f_deg, d.limits.gamma_f)?,
            },
            x0_p: LosState {
                rho: i.rho.unwrap_or(d.x0_p.rho),
                eps: angle("eps", i.eps, i.eps_deg, d.x0_p.eps)?,
                beta: angle("beta", i.beta, i.beta_deg, d.x0_p.beta)?,
                rho_dot: i.rho_dot.unwrap_or(d.x0_p.rho_dot),
                rho_epsdot: i.rho_eps_dot.unwrap_or(d.x0_p.rho_epsdot),
                rho_betadot: i.rho_beta_dot.unwrap_or(d.x0_p.rho_betadot),
            },
            x0_a: {
                let [phi, theta, psi] =
                    angles("attitude", i.attitude, i.attitude_deg, [d.x0_a.phi, d.x0_a.theta, d.x0_a.psi])?;
                let [w1, w2, w3] = i.body_rates.unwrap_or([d.x0_a.w1, d.x0_a.w2, d.x0_a.w3]);
                AttitudeState { phi, theta, psi, w1, w2, w3 }
            },
            duration: r.duration.unwrap_or(d.duration),
            mode: r.mode.unwrap_or(d.mode),
            seed: r.seed.unwrap_or(d.seed),
            wrap_delta: angle("wrap_delta", l.wrap_delta, l.wrap_delta_deg, d.wrap_delta)?,
            thresholds: d.thresholds,
            qp: d.qp,
            slack_weight: r.slack_weight.unwrap_or(d.slack_weight),
            collision_backoff: l.collision_backoff.unwrap_or(d.collision_backoff),
        };
        s.thresholds.angle = angle("angle_threshold", r.angle_threshold, r.angle_threshold_deg, d.thresholds.angle)?;
        s.thresholds.range = r.range_threshold.unwrap_or(d.thresholds.range);
        s.thresholds.steady_window = r.steady_window.unwrap_or(d.thresholds.steady_window);
        s.qp.tol = r.qp_tol.unwrap_or(d.qp.tol);
        s.qp.max_iter = r.qp_max_iter.unwrap_or(d.qp.max_iter);
        s.validate()?;
        Ok(s)
    }

    fn from_scenario(s: &Scenario) -> Self {
        let tuning = |t: &MpcTuning| TuningSection {
            np: Some(t.np),
            nc: Some(t.nc),
            ts: Some(t.ts),
            q: Some(t.q),
            q_per_range: Some(t.q_per_range),
            p: Some(t.p),
            ws: Some(t.ws),
        };
        Self {
            orbit: OrbitSection { a: Some(s.orbit.a), e: Some(s.orbit.e), f0: Some(s.orbit.f0), f0_deg: None, mu: Some(s.orbit.mu) },
            inertia: InertiaSection { j: Some(s.inertia.j), jw: Some(s.inertia.jw) },
            target: TargetSection {
                motion: Some(s.target.mode),
                omega: Some(s.target.omega_const),
                amp: Some(s.target.amp),
                periods: Some(s.target.periods),
                initial_attitude: Some(s.target.initial_attitude),
                initial_attitude_deg: None,
                rho_d: Some(s.rho_d),
            },
            mpc: MpcSection { position: tuning(&s.tuning_p), attitude: tuning(&s.tuning_a) },
            limits: LimitsSection {
                umax_p: Some(s.limits.umax_p),
                umax_a: Some(s.limits.umax_a),
                r_safe: Some(s.limits.r_safe),
                gamma_e: Some(s.limits.gamma_e),
                gamma_e_deg: None,
                gamma_f: Some(s.limits.gamma_f),
                gamma_f_deg: None,
                wrap_delta: Some(s.wrap_delta),
                wrap_delta_deg: None,
                collision_backoff: Some(s.collision_backoff),
            },
            initial: InitialSection {
                rho: Some(s.x0_p.rho),
                eps: Some(s.x0_p.eps),
                eps_deg: None,
                beta: Some(s.x0_p.beta),
                beta_deg: None,
                rho_dot: Some(s.x0_p.rho_dot),
                rho_eps_dot: Some(s.x0_p.rho_epsdot),
                rho_beta_dot: Some(s.x0_p.rho_betadot),
                attitude: Some([s.x0_a.phi, s.x0_a.theta, s.x0_a.psi]),
                attitude_deg: None,
                body_rates: Some([s.x0_a.w1, s.x0_a.w2, s.x0_a.w3]),
            },
            run: RunSection {
                duration: Some(s.duration),
                mode: Some(s.mode),
                seed: Some(s.seed),
                angle_threshold: Some(s.thresholds.angle),
                angle_threshold_deg: None,
                range_threshold: Some(s.thresholds.range),
                steady_window: Some(s.thresholds.steady_window),
                qp_tol: Some(s.qp.tol),
                qp_max_iter: Some(s.qp.max_iter),
                slack_weight: Some(s.slack_weight),
            },
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes every field explicitly, angles in radians.
pub fn scenario_to_toml(s: &Scenario) -> String {
    toml::to_string(&ScenarioFile::from_scenario(s)).expect("scenario fields are plain numbers and strings")
}
