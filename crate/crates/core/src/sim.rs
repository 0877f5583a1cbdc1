//! Closed-loop engine: two receding-horizon controllers (LOS translation and
//! attitude) around the nonlinear plants, with trajectory logging, metrics
//! and the sampling-versus-standard comparison.
//!
//! Each control step:
//! 1. propagate the target attitude over the horizon and build both references;
//! 2. run the singularity-free wrapping on azimuth, roll and yaw, resetting
//!    the plant representation when needed;
//! 3. solve the position QP, whose prediction also supplies the field-of-view
//!    centers for
//! 4. the attitude QP;
//! 5. log the step and advance plants, target and orbit by one RK4 step.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::attitude::{attitude_jacobians, attitude_rate, attitude_rhs, AttitudeState, InertiaParams, WheelInput};
use crate::constraints::{
    collision_ineq, cone_ineq, fov_ineq, input_ineq, stack, ConstraintParams, LinearInequalities, WRAP_CLIP_MARGIN,
};
use crate::error::{Error, Result};
use crate::integrator::rk4_step;
use crate::los::{los_jacobians, los_rate, los_rhs, los_to_lvlh, LosState, TranslationInput};
use crate::orbit::{propagate_orbit, OrbitParams, OrbitState, MU_EARTH};
use crate::prediction::{
    build_operators, condense, cost_from_prediction, discretize, sampling_block, sign, DiscreteModel, Prediction,
    PredictionOperators,
};
use crate::qp::{solve, QpProblem, QpSettings, QpStatus};
use crate::target::{desired_horizon, TargetMotion};
use crate::wrap::{angle_diff, reference_direction, Branch, WrapChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sampling,
    Standard,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sampling => "sampling",
            Mode::Standard => "standard",
        }
    }
}

/// Horizon, weights and sampling factors of one controller. The state weight
/// at step `k` is `diag(q + q_per_range / rho(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcTuning {
    pub np: usize,
    pub nc: usize,
    pub ts: f64,
    pub q: [f64; 6],
    pub q_per_range: [f64; 6],
    pub p: [f64; 3],
    pub ws: [f64; 3],
}

impl MpcTuning {
    pub fn position_default() -> Self {
        Self {
            np: 30,
            nc: 15,
            ts: 0.1,
            q: [1000.0, 30000.0, 30000.0, 0.0, 0.0, 0.0],
            q_per_range: [0.0, 0.0, 0.0, 1000.0, 3000.0, 3000.0],
            p: [100.0; 3],
            ws: [0.4, 0.25, 0.25],
        }
    }

    pub fn attitude_default() -> Self {
        Self {
            np: 30,
            nc: 15,
            ts: 0.1,
            q: [30000.0, 30000.0, 30000.0, 3000.0, 3000.0, 3000.0],
            q_per_range: [0.0; 6],
            p: [100.0; 3],
            ws: [0.4, 0.25, 0.25],
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.nc == 0 || self.nc > self.np {
            return Err(Error::Validation(format!("{name}: need 1 <= nc <= np, got nc = {}, np = {}", self.nc, self.np)));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::Validation(format!("{name}: ts must be > 0")));
        }
        if self.q.iter().chain(&self.q_per_range).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!("{name}: state weights must be >= 0")));
        }
        if self.p.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!("{name}: input weights must be > 0")));
        }
        if self.ws.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!("{name}: sampling factors must lie in [0, 1]")));
        }
        Ok(())
    }

    fn state_weight(&self, rho: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_fn(6, |i, _| self.q[i] + self.q_per_range[i] / rho))
    }

    fn input_weight(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.p))
    }
}

/// Thresholds below which a channel counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Angles (rad).
    pub angle: f64,
    /// Range (m).
    pub range: f64,
    /// Trailing window for steady-state figures (s).
    pub steady_window: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { angle: 0.5f64.to_radians(), range: 0.05, steady_window: 100.0 }
    }
}

/// Complete description of one closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub orbit: OrbitParams,
    pub inertia: InertiaParams,
    pub target: TargetMotion,
    /// Desired range to the target (m).
    pub rho_d: f64,
    pub tuning_p: MpcTuning,
    pub tuning_a: MpcTuning,
    pub limits: ConstraintParams,
    pub x0_p: LosState,
    pub x0_a: AttitudeState,
    pub duration: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Neighbourhood of the singular value that triggers wrapping (rad).
    pub wrap_delta: f64,
    pub thresholds: Thresholds,
    pub qp: QpSettings,
    pub slack_weight: f64,
    /// Added to `r_safe` in the predicted collision rows so that the
    /// linearisation error cannot carry the true range inside the sphere (m).
    pub collision_backoff: f64,
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

impl Default for Scenario {
    /// Constant-rate tumbling target with the reference initial conditions.
    fn default() -> Self {
        Self {
            orbit: OrbitParams { a: 1.0e7, e: 0.3, f0: 0.0, mu: MU_EARTH },
            inertia: InertiaParams { j: [50.0, 35.0, 40.0], jw: [5.0, 5.0, 5.0] },
            target: TargetMotion::constant([0.02, 0.015, 0.02], [deg(20.0), deg(50.0), deg(10.0)]),
            rho_d: 6.0,
            tuning_p: MpcTuning::position_default(),
            tuning_a: MpcTuning::attitude_default(),
            limits: ConstraintParams { umax_p: [3.0; 3], umax_a: [1.0; 3], r_safe: 6.0, gamma_e: deg(30.0), gamma_f: deg(30.0) },
            x0_p: LosState { rho: 80.0, eps: deg(25.0), beta: deg(-10.0), rho_dot: 0.0, rho_epsdot: 0.0, rho_betadot: 0.0 },
            x0_a: AttitudeState { phi: deg(20.0), theta: deg(25.0), psi: deg(-10.0), w1: 0.0, w2: 0.0, w3: 0.0 },
            duration: 500.0,
            mode: Mode::Sampling,
            seed: 0,
            wrap_delta: deg(0.5),
            thresholds: Thresholds::default(),
            qp: QpSettings::default(),
            slack_weight: 1e6,
            collision_backoff: 1e-4,
        }
    }
}

impl Scenario {
    /// Constant-rate tumbling target (same as [`Scenario::default`]).
    pub fn case1() -> Self {
        Self::default()
    }

    /// Sinusoidal target rates.
    pub fn case2() -> Self {
        Self {
            target: TargetMotion::sinusoidal([0.04; 3], [200.0, 100.0, 200.0 / 3.0], [deg(50.0), 0.0, deg(10.0)]),
            ..Self::default()
        }
    }

    /// Target spinning about its yaw axis so that the azimuth and yaw
    /// references cross +-180 deg within the first minute.
    pub fn yaw_crossing() -> Self {
        Self {
            target: TargetMotion::constant([0.0, 0.0, 0.02], [0.0, 0.0, deg(150.0)]),
            x0_p: LosState { rho: 20.0, eps: 0.0, beta: deg(-150.0), rho_dot: 0.0, rho_epsdot: 0.0, rho_betadot: 0.0 },
            x0_a: AttitudeState { phi: 0.0, theta: 0.0, psi: deg(150.0), w1: 0.0, w2: 0.0, w3: 0.0 },
            duration: 60.0,
            ..Self::default()
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.orbit.validate()?;
        self.inertia.validate()?;
        self.target.validate()?;
        self.limits.validate()?;
        self.tuning_p.validate("mpc.position")?;
        self.tuning_a.validate("mpc.attitude")?;
        if self.tuning_p.ts != self.tuning_a.ts {
            return Err(Error::Validation("both controllers must share the sampling interval".into()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Validation(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.rho_d >= self.limits.r_safe) {
            return Err(Error::Validation(format!("rho_d = {} lies inside the keep-out radius {}", self.rho_d, self.limits.r_safe)));
        }
        if !(self.wrap_delta > 0.0 && self.wrap_delta < deg(10.0)) {
            return Err(Error::Validation("wrap neighbourhood must lie in (0, 10) deg".into()));
        }
        if !(self.collision_backoff >= 0.0 && self.collision_backoff < 1.0) {
            return Err(Error::Validation(format!("collision back-off must lie in [0, 1) m, got {}", self.collision_backoff)));
        }
        if !(self.slack_weight > 0.0) || !(self.qp.tol > 0.0) || self.qp.max_iter == 0 {
            return Err(Error::Validation("QP settings must be positive".into()));
        }
        let x0p = self.x0_p;
        x0p.check().map_err(|e| Error::Validation(format!("initial LOS state: {e}")))?;
        if x0p.beta.abs() > PI || self.x0_a.phi.abs() > PI || self.x0_a.psi.abs() > PI {
            return Err(Error::Validation("initial azimuth, roll and yaw must lie in [-180, 180] deg".into()));
        }
        if self.x0_a.theta.abs() >= PI / 2.0 - 1e-9 {
            return Err(Error::Validation("initial pitch must lie inside (-90, 90) deg".into()));
        }
        Ok(())
    }

    pub fn ts(&self) -> f64 {
        self.tuning_p.ts
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.ts()).round() as usize
    }

    fn effective_ws(&self, t: &MpcTuning) -> [f64; 3] {
        match self.mode {
            Mode::Sampling => t.ws,
            Mode::Standard => [0.0; 3],
        }
    }
}

/// Signed distance to each bound on the true state, positive when satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub input_p: f64,
    pub input_a: f64,
    pub collision: f64,
    pub cone_eps: f64,
    pub cone_beta: f64,
    pub fov_roll: f64,
    pub fov_pitch: f64,
    pub fov_yaw: f64,
}

impl Margins {
    pub const NAMES: [&'static str; 8] =
        ["input_p", "input_a", "collision", "cone_eps", "cone_beta", "fov_roll", "fov_pitch", "fov_yaw"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.input_p,
            self.input_a,
            self.collision,
            self.cone_eps,
            self.cone_beta,
            self.fov_roll,
            self.fov_pitch,
            self.fov_yaw,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrapChannelId {
    Beta,
    Phi,
    Psi,
}

impl WrapChannelId {
    pub fn as_str(self) -> &'static str {
        match self {
            WrapChannelId::Beta => "beta",
            WrapChannelId::Phi => "phi",
            WrapChannelId::Psi => "psi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapRecord {
    pub channel: WrapChannelId,
    pub branch: Branch,
    pub x_before: f64,
    pub x_after: f64,
    pub carried_error: f64,
}

/// One control step. States are the plant states at `t` after any wrapping
/// reset; references are index 0 of the (possibly shifted) horizons; inputs
/// are the ones applied over `[t, t + ts)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub x_p: [f64; 6],
    pub x_a: [f64; 6],
    pub x_dp: [f64; 6],
    pub x_da: [f64; 6],
    pub u_p: [f64; 3],
    pub u_a: [f64; 3],
    pub target: [f64; 3],
    pub margins: Margins,
    pub qp_p: QpStatus,
    pub iters_p: usize,
    pub qp_a: QpStatus,
    pub iters_a: usize,
    pub wrap_events: Vec<WrapRecord>,
}

impl StepRecord {
    /// Tracking errors `reference - state` of (rho, eps, beta, phi, theta, psi),
    /// angles as wrapped differences.
    pub fn errors(&self) -> [f64; 6] {
        [
            self.x_dp[0] - self.x_p[0],
            angle_diff(self.x_dp[1], self.x_p[1]),
            angle_diff(self.x_dp[2], self.x_p[2]),
            angle_diff(self.x_da[0], self.x_a[0]),
            angle_diff(self.x_da[1], self.x_a[1]),
            angle_diff(self.x_da[2], self.x_a[2]),
        ]
    }

    pub fn relaxed(&self) -> bool {
        self.qp_p == QpStatus::RelaxedOptimal || self.qp_a == QpStatus::RelaxedOptimal
    }
}

pub const CHANNELS: [&str; 6] = ["rho", "eps", "beta", "phi", "theta", "psi"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub scenario: Scenario,
    pub records: Vec<StepRecord>,
}

impl TrajectoryLog {
    pub fn wrap_events(&self) -> impl Iterator<Item = (f64, &WrapRecord)> {
        self.records.iter().flat_map(|r| r.wrap_events.iter().map(move |e| (r.t, e)))
    }
}

struct Controller {
    tuning: MpcTuning,
    ws: [f64; 3],
    umax: [f64; 3],
    u_prev: Vector3<f64>,
    plan: Vec<Vector3<f64>>,
    rng: ChaCha8Rng,
}

impl Controller {
    fn new(tuning: MpcTuning, ws: [f64; 3], umax: [f64; 3], seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { tuning, ws, umax, u_prev: Vector3::zeros(), plan: vec![Vector3::zeros(); tuning.nc], rng }
    }

    /// Previous plan advanced by one step, last move held to the end of the
    /// prediction horizon.
    fn shifted_plan(&self) -> Vec<Vector3<f64>> {
        let nc = self.plan.len();
        (0..self.tuning.np).map(|i| self.plan[(i + 1).min(nc - 1)]).collect()
    }
}

struct Solved {
    u: Vector3<f64>,
    status: QpStatus,
    iterations: usize,
    predicted: DVector<f64>,
}

fn to_dvec<const N: usize>(v: &nalgebra::SVector<f64, N>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// Linearises along the nominal rollout `x_nom`, falling back to the last
/// admissible model if the rollout leaves the admissible set.
fn horizon_models<F, R>(x_nom: &[Vector6<f64>], linearise: F, rollout_ok: R) -> Result<Vec<DiscreteModel>>
where
    F: Fn(usize, &Vector6<f64>) -> Result<DiscreteModel>,
    R: Fn(usize) -> bool,
{
    let mut models: Vec<DiscreteModel> = Vec::with_capacity(x_nom.len());
    for (i, x) in x_nom.iter().enumerate() {
        let m = if rollout_ok(i) { linearise(i, x) } else { Err(Error::NonFinite("nominal rollout")) };
        match (m, models.last()) {
            (Ok(m), _) => models.push(m),
            (Err(e), None) => return Err(e),
            (Err(_), Some(last)) => {
                let last = last.clone();
                models.push(last);
            }
        }
    }
    Ok(models)
}

#[allow(clippy::too_many_arguments)]
fn mpc_solve(
    ctrl: &mut Controller,
    x_k: &Vector6<f64>,
    models: &[DiscreteModel],
    x_nom: &[Vector6<f64>],
    xd: &[Vector6<f64>],
    q: &DMatrix<f64>,
    accel: &Vector3<f64>,
    state_rows: impl FnOnce(&Prediction) -> LinearInequalities,
    settings: &QpSettings,
    slack_weight: f64,
    label: &'static str,
) -> Result<Solved> {
    let np = ctrl.tuning.np;
    let nc = ctrl.tuning.nc;
    let accel_signs = accel.map(sign);
    let blocks: Vec<DMatrix<f64>> = (0..nc)
        .map(|i| {
            let input_signs = Vector3::from_fn(|c, _| sign(xd[i + 1][c] - x_nom[i][c]));
            let w = sampling_block(&ctrl.ws, &accel_signs, &input_signs, &mut ctrl.rng);
            DMatrix::from_column_slice(3, 3, w.as_slice())
        })
        .collect();
    let mut ops: PredictionOperators = build_operators(models, nc)?;
    ops.set_sampling(&blocks)?;
    let u_prev = to_dvec(&ctrl.u_prev);
    let pred = condense(&ops, &to_dvec(x_k), &u_prev)?;
    let mut xd_star = DVector::zeros(6 * np);
    for i in 0..np {
        xd_star.rows_mut(6 * i, 6).copy_from(&xd[i + 1]);
    }
    let cost = cost_from_prediction(&pred, &xd_star, q, &ctrl.tuning.input_weight())?;
    let ineq = stack(vec![input_ineq(&ops, &u_prev, &DVector::from_row_slice(&ctrl.umax)), state_rows(&pred)])?;
    let problem = QpProblem {
        h: cost.h,
        f: cost.f,
        soft_rows: ineq.soft_rows(),
        g_mat: ineq.g_mat,
        g: ineq.g,
        slack_weight,
    };
    let sol = solve(&problem, settings)?;
    log::debug!("{label} QP {:?} after {} iterations, kkt {:?}", sol.status, sol.iterations, sol.kkt);
    match sol.status {
        QpStatus::Infeasible => return Err(Error::QpInfeasible(label)),
        QpStatus::MaxIter => log::warn!("{label} QP hit the iteration cap; using the last iterate"),
        QpStatus::RelaxedOptimal => log::info!("{label} QP relaxed"),
        QpStatus::Optimal => {}
    }
    let du = &sol.z;
    let mut u = ctrl.u_prev;
    let mut plan = Vec::with_capacity(nc);
    for i in 0..nc {
        u += Vector3::new(du[3 * i], du[3 * i + 1], du[3 * i + 2]);
        plan.push(Vector3::from_fn(|c, _| u[c].clamp(-ctrl.umax[c], ctrl.umax[c])));
    }
    let applied = plan[0];
    ctrl.u_prev = applied;
    ctrl.plan = plan;
    Ok(Solved { u: applied, status: sol.status, iterations: sol.iterations, predicted: pred.states(du) })
}

/// Stepwise closed-loop simulation.
pub struct Simulator {
    scenario: Scenario,
    k: usize,
    x_p: Vector6<f64>,
    x_a: Vector6<f64>,
    orb: OrbitState,
    target_att: Vector3<f64>,
    pos: Controller,
    att: Controller,
    wrap_beta: WrapChannel,
    wrap_phi: WrapChannel,
    wrap_psi: WrapChannel,
    log: TrajectoryLog,
}

impl Simulator {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let s = scenario.clone();
        let wrap = || WrapChannel::new(1.0, s.wrap_delta);
        Ok(Self {
            k: 0,
            x_p: s.x0_p.to_vector(),
            x_a: s.x0_a.to_vector(),
            orb: s.orbit.initial_state(),
            target_att: Vector3::from(s.target.initial_attitude),
            pos: Controller::new(s.tuning_p, s.effective_ws(&s.tuning_p), s.limits.umax_p, s.seed, 0),
            att: Controller::new(s.tuning_a, s.effective_ws(&s.tuning_a), s.limits.umax_a, s.seed, 1),
            wrap_beta: wrap()?,
            wrap_phi: wrap()?,
            wrap_psi: wrap()?,
            log: TrajectoryLog { scenario: s.clone(), records: Vec::with_capacity(s.steps()) },
            scenario: s,
        })
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.scenario.ts()
    }

    pub fn finished(&self) -> bool {
        self.k >= self.scenario.steps()
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn into_log(self) -> TrajectoryLog {
        self.log
    }

    pub fn run(&mut self) -> Result<()> {
        while !self.finished() {
            self.step()?;
        }
        Ok(())
    }

    fn wrap_channel(
        ch: &mut WrapChannel,
        id: WrapChannelId,
        x: &mut f64,
        refs: &mut [Vector6<f64>],
        slot: usize,
        events: &mut Vec<WrapRecord>,
    ) -> Result<Vec<f64>> {
        let orig: Vec<f64> = refs.iter().map(|r| r[slot]).collect();
        let mut shifted = orig.clone();
        let out = ch.wrap_step(*x, &mut shifted, reference_direction(&orig))?;
        *x = out.x;
        if let Some(ev) = out.event {
            events.push(WrapRecord {
                channel: id,
                branch: ev.branch,
                x_before: ev.x_before,
                x_after: ev.x_after,
                carried_error: ev.carried_error,
            });
        }
        for (r, v) in refs.iter_mut().zip(&shifted) {
            r[slot] = *v;
        }
        Ok(shifted.iter().zip(&orig).map(|(a, b)| a - b).collect())
    }

    /// Advances one control period.
    pub fn step(&mut self) -> Result<()> {
        let s = &self.scenario;
        let ts = s.ts();
        let t = self.time();
        let (np_p, np_a) = (s.tuning_p.np, s.tuning_a.np);
        let horizon = desired_horizon(&s.target, &self.target_att, t, np_p.max(np_a), ts, s.rho_d)?;
        let mut xdp: Vec<Vector6<f64>> = horizon.poses[..=np_p].iter().map(|p| p.x_dp).collect();
        let mut xda: Vec<Vector6<f64>> = horizon.poses[..=np_a].iter().map(|p| p.x_da).collect();

        let mut events = Vec::new();
        let beta_shift =
            Self::wrap_channel(&mut self.wrap_beta, WrapChannelId::Beta, &mut self.x_p[2], &mut xdp, 2, &mut events)?;
        let roll_shift =
            Self::wrap_channel(&mut self.wrap_phi, WrapChannelId::Phi, &mut self.x_a[0], &mut xda, 0, &mut events)?;
        let yaw_shift =
            Self::wrap_channel(&mut self.wrap_psi, WrapChannelId::Psi, &mut self.x_a[2], &mut xda, 2, &mut events)?;

        // position controller
        let x_p = self.x_p;
        LosState::from_vector(&x_p).check()?;
        let plan = self.pos.shifted_plan();
        let mut x_nom = Vec::with_capacity(np_p);
        let mut orbs = Vec::with_capacity(np_p);
        let mut ok = Vec::with_capacity(np_p);
        let (mut x, mut orb, mut valid) = (x_p, self.orb, true);
        for u in plan.iter().take(np_p) {
            x_nom.push(x);
            orbs.push(orb);
            ok.push(valid);
            if valid {
                match rk4_step(|xs, us| los_rate(xs, us, &orb), &x, u, ts) {
                    // linearising inside the keep-out sphere is never useful and
                    // blows up near rho = 0
                    Ok(next) if next[0] >= s.limits.r_safe && LosState::from_vector(&next).check().is_ok() => x = next,
                    _ => valid = false,
                }
            }
            orb = propagate_orbit(&s.orbit, &orb, ts);
        }
        let models_p = horizon_models(
            &x_nom,
            |i, x| {
                let (a, b) = los_jacobians(&LosState::from_vector(x), &orbs[i])?;
                discretize(&DMatrix::from_column_slice(6, 6, a.as_slice()), &DMatrix::from_column_slice(6, 3, b.as_slice()), ts)
            },
            |i| ok[i],
        )?;
        let accel_p = los_rhs(&LosState::from_vector(&x_p), &TranslationInput::from_vector(&self.pos.u_prev), &self.orb)?.accels;
        let theta_t: Vec<f64> = horizon.attitudes[1..=np_p].iter().map(|a| a[1]).collect();
        let psi_t: Vec<f64> = horizon.attitudes[1..=np_p].iter().map(|a| a[2]).collect();
        let limits = s.limits;
        let r_keep_out = limits.r_safe + s.collision_backoff;
        let pos = mpc_solve(
            &mut self.pos,
            &x_p,
            &models_p,
            &x_nom,
            &xdp,
            &s.tuning_p.state_weight(x_p[0]),
            &accel_p,
            |pred| {
                stack(vec![collision_ineq(pred, r_keep_out), cone_ineq(pred, &theta_t, &psi_t, &beta_shift[1..], limits.gamma_e)])
                    .expect("rows share the prediction's column count")
            },
            &s.qp,
            s.slack_weight,
            "position",
        )?;

        // attitude controller, field-of-view centers from the position prediction
        let x_a = self.x_a;
        let nominal = |i: usize, c: usize| pos.predicted[6 * i.min(np_p - 1) + c];
        let eps_nom: Vec<f64> = (0..np_a).map(|i| nominal(i, 1)).collect();
        let beta_nom: Vec<f64> = (0..np_a).map(|i| nominal(i, 2)).collect();
        let yaw_ref: Vec<f64> = xda[1..].iter().map(|r| r[2]).collect();
        let plan = self.att.shifted_plan();
        let mut x_nom = Vec::with_capacity(np_a);
        let mut ok = Vec::with_capacity(np_a);
        let (mut x, mut valid) = (x_a, true);
        for u in plan.iter().take(np_a) {
            x_nom.push(x);
            ok.push(valid);
            if valid {
                match rk4_step(|xs, us| attitude_rate(xs, us, &s.inertia), &x, u, ts) {
                    Ok(next) if next[1].abs() < PI / 2.0 - 1e-9 => x = next,
                    _ => valid = false,
                }
            }
        }
        let models_a = horizon_models(
            &x_nom,
            |_, x| {
                let (a, b) = attitude_jacobians(&AttitudeState::from_vector(x), &s.inertia)?;
                discretize(&DMatrix::from_column_slice(6, 6, a.as_slice()), &DMatrix::from_column_slice(6, 3, b.as_slice()), ts)
            },
            |i| ok[i],
        )?;
        let accel_a = attitude_rhs(
            &AttitudeState::from_vector(&x_a),
            &WheelInput::from_vector(&self.att.u_prev),
            &s.inertia,
            ts,
        )?
        .accels;
        let att = mpc_solve(
            &mut self.att,
            &x_a,
            &models_a,
            &x_nom,
            &xda,
            &s.tuning_a.state_weight(1.0),
            &accel_a,
            |pred| fov_ineq(pred, &eps_nom, &beta_nom, &roll_shift[1..], &yaw_ref, &yaw_shift[1..], limits.gamma_f),
            &s.qp,
            s.slack_weight,
            "attitude",
        )?;

        let target_now = horizon.attitudes[0];
        self.log.records.push(StepRecord {
            t,
            x_p: x_p.into(),
            x_a: x_a.into(),
            x_dp: xdp[0].into(),
            x_da: xda[0].into(),
            u_p: pos.u.into(),
            u_a: att.u.into(),
            target: target_now.into(),
            margins: margins(&limits, &x_p, &x_a, &target_now, &pos.u, &att.u),
            qp_p: pos.status,
            iters_p: pos.iterations,
            qp_a: att.status,
            iters_a: att.iterations,
            wrap_events: events,
        });

        // plants, target and orbit
        let orb = self.orb;
        let next_p = rk4_step(|xs, us| los_rate(xs, us, &orb), &x_p, &pos.u, ts)?;
        let next_a = rk4_step(|xs, us| attitude_rate(xs, us, &s.inertia), &x_a, &att.u, ts)?;
        if next_p.iter().chain(next_a.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("plant state"));
        }
        LosState::from_vector(&next_p).check()?;
        crate::los::check_gimbal("theta", next_a[1])?;
        self.target_att = crate::target::propagate_target_motion(&s.target, &self.target_att, t, ts)?;
        self.orb = propagate_orbit(&s.orbit, &self.orb, ts);
        self.x_p = next_p;
        self.x_a = next_a;
        self.k += 1;
        Ok(())
    }
}

fn margins(
    limits: &ConstraintParams,
    x_p: &Vector6<f64>,
    x_a: &Vector6<f64>,
    target: &Vector3<f64>,
    u_p: &Vector3<f64>,
    u_a: &Vector3<f64>,
) -> Margins {
    let input = |u: &Vector3<f64>, umax: &[f64; 3]| (0..3).map(|c| umax[c] - u[c].abs()).fold(f64::INFINITY, f64::min);
    Margins {
        input_p: input(u_p, &limits.umax_p),
        input_a: input(u_a, &limits.umax_a),
        collision: x_p[0] - limits.r_safe,
        cone_eps: limits.gamma_e - (x_p[1] - target[1]).abs(),
        cone_beta: limits.gamma_e - angle_diff(x_p[2], -target[2]).abs(),
        fov_roll: PI + WRAP_CLIP_MARGIN - x_a[0].abs(),
        fov_pitch: limits.gamma_f - (x_a[1] - x_p[1]).abs(),
        fov_yaw: limits.gamma_f - angle_diff(x_a[2], -x_p[2]).abs(),
    }
}

/// Runs a scenario to completion.
pub fn run_closed_loop(s: &Scenario) -> Result<TrajectoryLog> {
    let mut sim = Simulator::new(s)?;
    sim.run()?;
    Ok(sim.into_log())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub name: String,
    /// Start of the final run below threshold; `None` if the last sample is above it.
    pub convergence_time: Option<f64>,
    /// Largest excursion past zero against the sign of the initial error.
    pub overshoot: f64,
    pub steady_state_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub channels: Vec<ChannelMetrics>,
    /// RMS of the LVLH position error over the steady-state window (m).
    pub lvlh_rms: f64,
    /// Largest bound violation on the true state per family, zero if none.
    pub max_constraint_violation: Vec<(String, f64)>,
    pub reset_count: usize,
    pub relaxed_steps: usize,
    pub max_iter_steps: usize,
}

/// Time of the start of the final stretch with `|e| < threshold`.
pub fn convergence_time(t: &[f64], e: &[f64], threshold: f64) -> Option<f64> {
    let last_bad = e.iter().rposition(|v| v.abs() >= threshold);
    match last_bad {
        None => t.first().copied(),
        Some(i) if i + 1 < t.len() => Some(t[i + 1]),
        Some(_) => None,
    }
}

pub fn overshoot(e: &[f64]) -> f64 {
    let Some(&e0) = e.first() else { return 0.0 };
    let s = sign(e0);
    // adding 0.0 turns a -0.0 maximum into 0.0
    e.iter().map(|v| -s * v).fold(0.0, f64::max) + 0.0
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

pub fn metrics(log: &TrajectoryLog, thresholds: &Thresholds) -> Metrics {
    let recs = &log.records;
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let errors: Vec<[f64; 6]> = recs.iter().map(|r| r.errors()).collect();
    let t_end = t.last().copied().unwrap_or(0.0);
    let window_start = t_end - thresholds.steady_window;
    let in_window = |i: &usize| t[*i] >= window_start;
    let channels = CHANNELS
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let e: Vec<f64> = errors.iter().map(|v| v[c]).collect();
            let thr = if c == 0 { thresholds.range } else { thresholds.angle };
            ChannelMetrics {
                name: name.to_string(),
                convergence_time: convergence_time(&t, &e, thr),
                overshoot: overshoot(&e),
                steady_state_rms: rms((0..e.len()).filter(in_window).map(|i| e[i])),
            }
        })
        .collect();
    let lvlh_rms = rms((0..recs.len()).filter(in_window).map(|i| {
        let r = &recs[i];
        let x = LosState::from_vector(&Vector6::from(r.x_p));
        let xd = LosState::from_vector(&Vector6::from(r.x_dp));
        (los_to_lvlh(&x) - los_to_lvlh(&xd)).norm()
    }));
    let max_constraint_violation = Margins::NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let worst = recs.iter().map(|r| -r.margins.values()[j]).fold(0.0, f64::max);
            (name.to_string(), worst)
        })
        .collect();
    Metrics {
        channels,
        lvlh_rms,
        max_constraint_violation,
        reset_count: recs.iter().map(|r| r.wrap_events.len()).sum(),
        relaxed_steps: recs.iter().filter(|r| r.relaxed()).count(),
        max_iter_steps: recs.iter().filter(|r| r.qp_p == QpStatus::MaxIter || r.qp_a == QpStatus::MaxIter).count(),
    }
}

/// Mean of `|e|` per channel over records with `t <= t_end`.
pub fn mean_abs_error(log: &TrajectoryLog, t_end: f64) -> [f64; 6] {
    let mut acc = [0.0; 6];
    let mut n = 0usize;
    for r in log.records.iter().filter(|r| r.t <= t_end + 1e-9) {
        for (a, e) in acc.iter_mut().zip(r.errors()) {
            *a += e.abs();
        }
        n += 1;
    }
    acc.map(|a| if n == 0 { 0.0 } else { a / n as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFigures {
    pub overshoot: [f64; 6],
    /// `NaN` when the channel never settles.
    pub convergence_time: [f64; 6],
    pub mean_abs_error: [f64; 6],
}

impl ModeFigures {
    fn from_log(log: &TrajectoryLog, window_end: f64) -> Self {
        let m = metrics(log, &log.scenario.thresholds);
        Self {
            overshoot: std::array::from_fn(|c| m.channels[c].overshoot),
            convergence_time: std::array::from_fn(|c| m.channels[c].convergence_time.unwrap_or(f64::NAN)),
            mean_abs_error: mean_abs_error(log, window_end),
        }
    }

    fn mean(items: &[ModeFigures]) -> Self {
        let n = items.len().max(1) as f64;
        let avg = |f: &dyn Fn(&ModeFigures) -> [f64; 6]| {
            std::array::from_fn(|c| items.iter().map(|m| f(m)[c]).sum::<f64>() / n)
        };
        Self {
            overshoot: avg(&|m| m.overshoot),
            convergence_time: avg(&|m| m.convergence_time),
            mean_abs_error: avg(&|m| m.mean_abs_error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub sampling: ModeFigures,
    pub standard: ModeFigures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub metric: String,
    pub channel: String,
    pub sampling: f64,
    pub standard: f64,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub channels: Vec<String>,
    /// Errors are averaged over `[0, window_end]`.
    pub window_end: f64,
    pub per_seed: Vec<SeedComparison>,
    pub mean_sampling: ModeFigures,
    pub mean_standard: ModeFigures,
    pub winners: Vec<Winner>,
}

fn same_up_to_mode_and_seed(a: &Scenario, b: &Scenario) -> bool {
    let strip = |s: &Scenario| Scenario { mode: Mode::Sampling, seed: 0, ..s.clone() };
    strip(a) == strip(b)
}

/// Tabulates paired runs. `pairs[i]` holds the sampling and standard logs of
/// one seed.
pub fn compare(pairs: &[(TrajectoryLog, TrajectoryLog)], window_end: f64) -> Result<CompareReport> {
    let Some((first, _)) = pairs.first() else {
        return Err(Error::Validation("comparison needs at least one pair of runs".into()));
    };
    let mut per_seed = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        if !same_up_to_mode_and_seed(&a.scenario, &first.scenario) || !same_up_to_mode_and_seed(&b.scenario, &first.scenario) {
            return Err(Error::ScenarioMismatch("runs differ in more than mode and seed".into()));
        }
        if a.scenario.mode != Mode::Sampling || b.scenario.mode != Mode::Standard {
            return Err(Error::ScenarioMismatch("each pair must be (sampling, standard)".into()));
        }
        if a.scenario.seed != b.scenario.seed {
            return Err(Error::ScenarioMismatch("paired runs use different seeds".into()));
        }
        per_seed.push(SeedComparison {
            seed: a.scenario.seed,
            sampling: ModeFigures::from_log(a, window_end),
            standard: ModeFigures::from_log(b, window_end),
        });
    }
    let mean_sampling = ModeFigures::mean(&per_seed.iter().map(|s| s.sampling.clone()).collect::<Vec<_>>());
    let mean_standard = ModeFigures::mean(&per_seed.iter().map(|s| s.standard.clone()).collect::<Vec<_>>());
    let mut winners = Vec::new();
    let metrics: [(&str, fn(&ModeFigures) -> [f64; 6]); 3] = [
        ("overshoot", |m| m.overshoot),
        ("convergence_time", |m| m.convergence_time),
        ("mean_abs_error", |m| m.mean_abs_error),
    ];
    for (name, get) in metrics {
        for (c, ch) in CHANNELS.iter().enumerate() {
            let (a, b) = (get(&mean_sampling)[c], get(&mean_standard)[c]);
            let winner = if a < b {
                "sampling"
            } else if b < a {
                "standard"
            } else {
                "tie"
            };
            winners.push(Winner {
                metric: name.to_string(),
                channel: ch.to_string(),
                sampling: a,
                standard: b,
                winner: winner.to_string(),
            });
        }
    }
    Ok(CompareReport {
        channels: CHANNELS.iter().map(|c| c.to_string()).collect(),
        window_end,
        per_seed,
        mean_sampling,
        mean_standard,
        winners,
    })
}

/// Runs both modes for every seed in parallel and returns the paired logs.
pub fn run_pairs(base: &Scenario, seeds: &[u64]) -> Result<Vec<(TrajectoryLog, TrajectoryLog)>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let a = Scenario { mode: Mode::Sampling, seed, ..base.clone() };
            let b = Scenario { mode: Mode::Standard, seed, ..base.clone() };
            Ok((run_closed_loop(&a)?, run_closed_loop(&b)?))
        })
        .collect()
}
