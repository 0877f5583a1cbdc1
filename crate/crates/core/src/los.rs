//! Nonlinear 3-D line-of-sight relative translation and its exact
//! state-dependent (pseudo-linear) factorisation `dx = A(x) x + B(x) u`.
//!
//! State ordering: `[rho, eps, beta, rho_dot, rho*eps_dot, rho*beta_dot]`.

use nalgebra::{Matrix6, Matrix6x3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::orbit::OrbitState;

/// Distance kept from +-pi/2 by every elevation/pitch guard.
pub const GIMBAL_GUARD: f64 = 1e-9;

pub(crate) fn check_gimbal(what: &'static str, value: f64) -> Result<()> {
    if value.abs() >= FRAC_PI_2 - GIMBAL_GUARD || !value.is_finite() {
        return Err(Error::GimbalLock { what, value });
    }
    Ok(())
}

/// Relative translation expressed in the LOS frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosState {
    pub rho: f64,
    pub eps: f64,
    pub beta: f64,
    pub rho_dot: f64,
    pub rho_epsdot: f64,
    pub rho_betadot: f64,
}

impl LosState {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.rho, self.eps, self.beta, self.rho_dot, self.rho_epsdot, self.rho_betadot)
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            rho: x[0],
            eps: x[1],
            beta: x[2],
            rho_dot: x[3],
            rho_epsdot: x[4],
            rho_betadot: x[5],
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::DegenerateRange(self.rho));
        }
        check_gimbal("eps", self.eps)
    }
}

/// Specific thrust in the LOS frame (m/s^2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TranslationInput {
    pub u_rho: f64,
    pub u_eps: f64,
    pub u_beta: f64,
}

impl TranslationInput {
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u_rho, self.u_eps, self.u_beta)
    }

    pub fn from_vector(u: &Vector3<f64>) -> Self {
        Self { u_rho: u[0], u_eps: u[1], u_beta: u[2] }
    }
}

/// Time derivative of the LOS state plus the second derivatives of the
/// measured quantities, whose signs steer the sampling correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosDerivative {
    pub dx: Vector6<f64>,
    /// `(rho_ddot, eps_ddot, beta_ddot)`.
    pub accels: Vector3<f64>,
}

/// Exact nonlinear right-hand side.
pub fn los_rhs(x: &LosState, u: &TranslationInput, orb: &OrbitState) -> Result<LosDerivative> {
    x.check()?;
    let LosState { rho, eps, beta, rho_dot, rho_epsdot, rho_betadot } = *x;
    let (se, ce) = eps.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let eps_dot = rho_epsdot / rho;
    let beta_dot = rho_betadot / rho;
    let rel = beta_dot - orb.omega;
    let k = gravity_gradient(orb);

    let rho_dd = rho * eps_dot * eps_dot + rho * rel * rel * ce * ce
        - k * (rho - 3.0 * rho * ce * ce * sb * sb)
        + u.u_rho;
    let eps_dd = (-2.0 * rho_dot * eps_dot - rho * rel * rel * se * ce - 3.0 * k * rho * se * ce * sb * sb
        + u.u_eps)
        / rho;
    let beta_dd = orb.omega_dot
        + (3.0 * k * rho * ce * sb * cb - u.u_beta - 2.0 * rho_dot * rel * ce + 2.0 * rho * eps_dot * rel * se)
            / (rho * ce);

    let dx = Vector6::new(
        rho_dot,
        eps_dot,
        beta_dot,
        rho_dd,
        rho_dot * eps_dot + rho * eps_dd,
        rho_dot * beta_dot + rho * beta_dd,
    );
    Ok(LosDerivative { dx, accels: Vector3::new(rho_dd, eps_dd, beta_dd) })
}

/// Vector form of [`los_rhs`] used by the integrators.
pub fn los_rate(x: &Vector6<f64>, u: &Vector3<f64>, orb: &OrbitState) -> Result<Vector6<f64>> {
    los_rhs(&LosState::from_vector(x), &TranslationInput::from_vector(u), orb).map(|d| d.dx)
}

fn gravity_gradient(orb: &OrbitState) -> f64 {
    orb.mu / (orb.rt * orb.rt * orb.rt)
}

/// State-dependent matrices `(A, B)` with `dx = A(x) x + B(x) u`.
pub fn los_jacobians(x: &LosState, orb: &OrbitState) -> Result<(Matrix6<f64>, Matrix6x3<f64>)> {
    x.check()?;
    let x1 = x.rho;
    let x5 = x.rho_epsdot;
    let x6 = x.rho_betadot;
    let (s2, c2) = x.eps.sin_cos();
    let (s3, c3) = x.beta.sin_cos();
    let w = orb.omega;
    let k = gravity_gradient(orb);

    let a41 = w * w * c2 * c2 - k * (1.0 - 3.0 * c2 * c2 * s3 * s3);
    let a46 = (-2.0 * w + x6 / x1) * c2 * c2;
    let a51 = (-w * w - 3.0 * k * s3 * s3) * c2 * s2;
    let a56 = (2.0 * w - x6 / x1) * c2 * s2;
    let a61 = orb.omega_dot + 3.0 * k * s3 * c3;

    #[rustfmt::skip]
    let a = Matrix6::new(
        0.0, 0.0, 0.0, 1.0,                 0.0,                            0.0,
        0.0, 0.0, 0.0, 0.0,                 1.0 / x1,                       0.0,
        0.0, 0.0, 0.0, 0.0,                 0.0,                            1.0 / x1,
        a41, 0.0, 0.0, 0.0,                 x5 / x1,                        a46,
        a51, 0.0, 0.0, -x5 / x1,            0.0,                            a56,
        a61, 0.0, 0.0, 2.0 * w - x6 / x1,   2.0 * s2 / c2 * (-w + x6 / x1), 0.0,
    );
    let mut b = Matrix6x3::zeros();
    b[(3, 0)] = 1.0;
    b[(4, 1)] = 1.0;
    b[(5, 2)] = -1.0 / c2;
    Ok((a, b))
}

/// Chaser position in the LVLH frame: the LOS vector `(rho, 0, 0)` rotated by
/// `eps` about z and then by `beta` about y, i.e. `R_y(beta) R_z(eps) (rho, 0, 0)`.
/// `eps` is the elevation out of the x-z plane and `beta` the azimuth of the
/// projection measured from x.
pub fn los_to_lvlh(x: &LosState) -> Vector3<f64> {
    let (se, ce) = x.eps.sin_cos();
    let (sb, cb) = x.beta.sin_cos();
    Vector3::new(x.rho * ce * cb, x.rho * se, -x.rho * ce * sb)
}
