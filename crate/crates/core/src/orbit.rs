//! Target orbit: true anomaly propagation and the derived geocentric
//! distance, orbital rate and its derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earth gravitational parameter (m^3/s^2).
pub const MU_EARTH: f64 = 3.986_004_418e14;

/// Keplerian description of the target orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    /// Semi-major axis (m).
    pub a: f64,
    /// Eccentricity.
    pub e: f64,
    /// Initial true anomaly (rad).
    pub f0: f64,
    /// Gravitational parameter (m^3/s^2).
    pub mu: f64,
}

impl OrbitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Validation(format!("semi-major axis must be > 0, got {}", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::Validation(format!("eccentricity must lie in [0, 1), got {}", self.e)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Validation(format!("mu must be > 0, got {}", self.mu)));
        }
        if !self.f0.is_finite() {
            return Err(Error::NonFinite("orbit.f0"));
        }
        Ok(())
    }

    /// Semi-latus rectum a(1 - e^2).
    pub fn semi_latus_rectum(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }

    /// Geocentric distance of the target at true anomaly `f`.
    pub fn radius(&self, f: f64) -> f64 {
        self.semi_latus_rectum() / (1.0 + self.e * f.cos())
    }

    /// Orbital rate df/dt at true anomaly `f`.
    pub fn rate(&self, f: f64) -> f64 {
        let r = self.radius(f);
        (self.mu * self.semi_latus_rectum()).sqrt() / (r * r)
    }

    /// Full orbit state at true anomaly `f`.
    pub fn state_at(&self, f: f64) -> OrbitState {
        let rt = self.radius(f);
        OrbitState {
            f,
            rt,
            omega: self.rate(f),
            omega_dot: -2.0 * self.mu * self.e * f.sin() / (rt * rt * rt),
            mu: self.mu,
        }
    }

    pub fn initial_state(&self) -> OrbitState {
        self.state_at(self.f0)
    }
}

/// Instantaneous orbit quantities entering the LOS dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    /// True anomaly (rad).
    pub f: f64,
    /// Target geocentric distance (m).
    pub rt: f64,
    /// Orbital rate (rad/s).
    pub omega: f64,
    /// Orbital rate derivative (rad/s^2).
    pub omega_dot: f64,
    /// Gravitational parameter carried along for the gravity-gradient terms.
    pub mu: f64,
}

/// Advances the true anomaly by one RK4 step of df/dt = omega(f) and
/// re-evaluates the closed-form orbit quantities.
pub fn propagate_orbit(orbit: &OrbitParams, prev: &OrbitState, dt: f64) -> OrbitState {
    let rate = |f: f64| orbit.rate(f);
    let f = prev.f;
    let k1 = rate(f);
    let k2 = rate(f + 0.5 * dt * k1);
    let k3 = rate(f + 0.5 * dt * k2);
    let k4 = rate(f + dt * k3);
    orbit.state_at(f + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}
