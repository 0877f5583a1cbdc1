//! Constraint families as linear inequalities `G du <= g` in the stacked input
//! increments.
//!
//! Every state bound is imposed on the affine prediction `x* = base + M du`
//! at each of the `np` horizon steps. Within a family the upper-bound rows for
//! all steps come first, then the lower-bound rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::los::GIMBAL_GUARD;
use crate::prediction::{PredictionOperators, Prediction};
use crate::wrap::wrap_angle;

/// Extra room beyond `+-pi` granted to angles that the wrapping logic keeps
/// bounded anyway. The bound only limits the representation, so it must not
/// bind while a reset is pending.
pub const WRAP_CLIP_MARGIN: f64 = 5.0 * PI / 180.0;

const PITCH_LIMIT: f64 = FRAC_PI_2 - GIMBAL_GUARD;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintParams {
    /// Thrust limits (m/s^2).
    pub umax_p: [f64; 3],
    /// Wheel acceleration limits (rad/s^2).
    pub umax_a: [f64; 3],
    /// Keep-out radius (m).
    pub r_safe: f64,
    /// Entry-cone half angle (rad).
    pub gamma_e: f64,
    /// Field-of-view half angle (rad).
    pub gamma_f: f64,
}

impl ConstraintParams {
    pub fn validate(&self) -> Result<()> {
        if self.umax_p.iter().chain(&self.umax_a).any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(Error::Validation("input limits must be positive".into()));
        }
        if !(self.r_safe > 0.0) {
            return Err(Error::Validation(format!("r_safe must be > 0, got {}", self.r_safe)));
        }
        for (name, g) in [("gamma_e", self.gamma_e), ("gamma_f", self.gamma_f)] {
            if !(g > 0.0 && g < FRAC_PI_2) {
                return Err(Error::Validation(format!("{name} must lie in (0, 90) deg, got {g} rad")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Input,
    Collision,
    ConeEps,
    ConeBeta,
    FovRoll,
    FovPitch,
    FovYaw,
}

impl Family {
    /// Actuator limits are physical and never relaxed.
    pub fn is_soft(self) -> bool {
        self != Family::Input
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearInequalities {
    pub g_mat: DMatrix<f64>,
    pub g: DVector<f64>,
    pub labels: Vec<Family>,
}

impl LinearInequalities {
    pub fn empty(cols: usize) -> Self {
        Self { g_mat: DMatrix::zeros(0, cols), g: DVector::zeros(0), labels: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.g.len()
    }

    /// `g - G du`; negative entries are violated rows.
    pub fn slack(&self, du: &DVector<f64>) -> DVector<f64> {
        &self.g - &self.g_mat * du
    }

    pub fn soft_rows(&self) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, f)| f.is_soft()).map(|(i, _)| i).collect()
    }
}

/// Representation range of a wrapping angle at a horizon step whose reference
/// carries the shift `s`. The plant state has not been reset yet, so the range
/// spans both the plain and the shifted representation.
fn shifted_range(s: f64) -> (f64, f64) {
    let lim = PI + WRAP_CLIP_MARGIN;
    (-lim + s.min(0.0), lim + s.max(0.0))
}

/// `[max(lo, c - w), min(hi, c + w)]`. A center outside `[lo, hi]` collapses
/// the interval to `[lo, hi]`.
pub fn bracket(center: f64, half_width: f64, lo: f64, hi: f64) -> (f64, f64) {
    if !(lo..=hi).contains(&center) {
        log::debug!("bound center {center} outside [{lo}, {hi}]; using the full range");
        return (lo, hi);
    }
    ((center - half_width).max(lo), (center + half_width).min(hi))
}

/// `-umax <= Lambda u_prev + Gamma du <= umax` for every move.
pub fn input_ineq(ops: &PredictionOperators, u_prev: &DVector<f64>, umax: &DVector<f64>) -> LinearInequalities {
    let k = ops.m * ops.nc;
    let lu = &ops.lambda * u_prev;
    let umax_t = DVector::from_fn(k, |i, _| umax[i % ops.m]);
    let mut g_mat = DMatrix::zeros(2 * k, k);
    g_mat.rows_mut(0, k).copy_from(&ops.gamma);
    g_mat.rows_mut(k, k).copy_from(&(-&ops.gamma));
    let mut g = DVector::zeros(2 * k);
    g.rows_mut(0, k).copy_from(&(&umax_t - &lu));
    g.rows_mut(k, k).copy_from(&(&umax_t + &lu));
    LinearInequalities { g_mat, g, labels: vec![Family::Input; 2 * k] }
}

/// Per-step bounds on coordinate `idx` of the prediction.
pub fn bound_rows(
    pred: &Prediction,
    idx: usize,
    lower: Option<&[f64]>,
    upper: Option<&[f64]>,
    family: Family,
) -> LinearInequalities {
    let cols = pred.m.ncols();
    let count = lower.is_some() as usize * pred.np + upper.is_some() as usize * pred.np;
    let mut g_mat = DMatrix::zeros(count, cols);
    let mut g = DVector::zeros(count);
    let mut r = 0;
    if let Some(ub) = upper {
        for i in 0..pred.np {
            let row = pred.row(i, idx);
            g_mat.row_mut(r).copy_from(&pred.m.row(row));
            g[r] = ub[i] - pred.base[row];
            r += 1;
        }
    }
    if let Some(lb) = lower {
        for i in 0..pred.np {
            let row = pred.row(i, idx);
            g_mat.row_mut(r).copy_from(&(-pred.m.row(row)));
            g[r] = -lb[i] + pred.base[row];
            r += 1;
        }
    }
    LinearInequalities { g_mat, g, labels: vec![family; count] }
}

/// `rho >= r_safe` at every predicted step.
pub fn collision_ineq(pred: &Prediction, r_safe: f64) -> LinearInequalities {
    bound_rows(pred, 0, Some(&vec![r_safe; pred.np]), None, Family::Collision)
}

/// Entry cone around the docking axis: `eps` within `gamma_e` of the target
/// pitch and `beta` within `gamma_e` of the negated target yaw. `theta_t`,
/// `psi_t` and `beta_shift` hold one value per predicted step; `beta_shift`
/// is the multiple of `2 pi` the azimuth reference is currently expressed in.
pub fn cone_ineq(
    pred: &Prediction,
    theta_t: &[f64],
    psi_t: &[f64],
    beta_shift: &[f64],
    gamma_e: f64,
) -> LinearInequalities {
    let np = pred.np;
    let (mut el, mut eu) = (vec![0.0; np], vec![0.0; np]);
    let (mut bl, mut bu) = (vec![0.0; np], vec![0.0; np]);
    for i in 0..np {
        (el[i], eu[i]) = bracket(theta_t[i], gamma_e, -PITCH_LIMIT, PITCH_LIMIT);
        let s = beta_shift[i];
        let (lo, hi) = shifted_range(s);
        (bl[i], bu[i]) = bracket(wrap_angle(-psi_t[i]) + s, gamma_e, lo, hi);
    }
    stack_unchecked(vec![
        bound_rows(pred, 1, Some(&el), Some(&eu), Family::ConeEps),
        bound_rows(pred, 2, Some(&bl), Some(&bu), Family::ConeBeta),
    ])
}

/// Field-of-view bounds on the chaser attitude prediction: roll inside its
/// representation range, pitch within `gamma_f` of the nominal elevation and
/// yaw within `gamma_f` of the negated nominal azimuth, re-expressed next to
/// the yaw reference `yaw_ref`.
#[allow(clippy::too_many_arguments)]
pub fn fov_ineq(
    pred: &Prediction,
    eps_nom: &[f64],
    beta_nom: &[f64],
    roll_shift: &[f64],
    yaw_ref: &[f64],
    yaw_shift: &[f64],
    gamma_f: f64,
) -> LinearInequalities {
    let np = pred.np;
    let (mut rl, mut ru) = (vec![0.0; np], vec![0.0; np]);
    let (mut pl, mut pu) = (vec![0.0; np], vec![0.0; np]);
    let (mut yl, mut yu) = (vec![0.0; np], vec![0.0; np]);
    for i in 0..np {
        (rl[i], ru[i]) = shifted_range(roll_shift[i]);
        (pl[i], pu[i]) = bracket(eps_nom[i], gamma_f, -PITCH_LIMIT, PITCH_LIMIT);
        let c = -beta_nom[i];
        let c = c + TAU * ((yaw_ref[i] - c) / TAU).round();
        let (lo, hi) = shifted_range(yaw_shift[i]);
        (yl[i], yu[i]) = bracket(c, gamma_f, lo, hi);
    }
    stack_unchecked(vec![
        bound_rows(pred, 0, Some(&rl), Some(&ru), Family::FovRoll),
        bound_rows(pred, 1, Some(&pl), Some(&pu), Family::FovPitch),
        bound_rows(pred, 2, Some(&yl), Some(&yu), Family::FovYaw),
    ])
}

fn stack_unchecked(parts: Vec<LinearInequalities>) -> LinearInequalities {
    stack(parts).expect("parts built from one prediction share their column count")
}

/// Concatenates the rows of `parts` in order.
pub fn stack(parts: Vec<LinearInequalities>) -> Result<LinearInequalities> {
    let Some(first) = parts.first() else {
        return Ok(LinearInequalities::empty(0));
    };
    let cols = first.g_mat.ncols();
    if let Some(bad) = parts.iter().find(|p| p.g_mat.ncols() != cols) {
        return Err(Error::DimensionMismatch { context: "constraint stack", expected: cols, got: bad.g_mat.ncols() });
    }
    let rows: usize = parts.iter().map(|p| p.rows()).sum();
    let mut g_mat = DMatrix::zeros(rows, cols);
    let mut g = DVector::zeros(rows);
    let mut labels = Vec::with_capacity(rows);
    let mut r = 0;
    for p in parts {
        let k = p.rows();
        g_mat.rows_mut(r, k).copy_from(&p.g_mat);
        g.rows_mut(r, k).copy_from(&p.g);
        labels.extend(p.labels);
        r += k;
    }
    Ok(LinearInequalities { g_mat, g, labels })
}
