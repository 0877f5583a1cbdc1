//! Singularity-free tracking of angles that live on a bounded interval
//! `[-L, L]` with `L = n_x * pi`.
//!
//! When the reference or the state reaches the singular value, either the
//! reference horizon is temporarily re-expressed one period `2L` away, or the
//! state is reset by one period, so the tracked error never sees a `2L` jump.
//! Resets are exact multiples of the period and never change the physical pose.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

/// Smallest signed difference `a - b` modulo `2 pi`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Shift currently applied to part of the reference horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PendingShift {
    #[default]
    None,
    Plus,
    Minus,
}

/// Which situation triggered a reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Increasing reference reached `+L` first; state reset on arrival.
    RefFirstUp,
    /// Increasing state reached `+L` first.
    StateFirstUp,
    /// Decreasing reference reached `-L` first; state reset on arrival.
    RefFirstDown,
    /// Decreasing state reached `-L` first.
    StateFirstDown,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::RefFirstUp => "A",
            Branch::StateFirstUp => "B",
            Branch::RefFirstDown => "C",
            Branch::StateFirstDown => "D",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::RefFirstUp => "ref_first_up",
            Branch::StateFirstUp => "state_first_up",
            Branch::RefFirstDown => "ref_first_down",
            Branch::StateFirstDown => "state_first_down",
        }
    }
}

/// A state reset. `carried_error` is the reference minus the state just
/// before the reset, both in the same branch, and is the initial error of the
/// next period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapEvent {
    pub branch: Branch,
    pub x_before: f64,
    pub x_after: f64,
    pub carried_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrapOutcome {
    pub x: f64,
    pub event: Option<WrapEvent>,
    /// Set when a pending shift was cancelled by a direction change.
    pub cancelled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapChannel {
    pub n_x: f64,
    pub delta: f64,
    pub pending_shift: PendingShift,
    pending_dir: Option<Direction>,
    pub carried_error: f64,
}

impl WrapChannel {
    pub fn new(n_x: f64, delta: f64) -> Result<Self> {
        if n_x != 1.0 && n_x != 0.5 {
            return Err(Error::Validation(format!("n_x must be 1/2 or 1, got {n_x}")));
        }
        if !(delta > 0.0 && delta < n_x * PI) {
            return Err(Error::Validation(format!("wrap neighbourhood must be positive, got {delta}")));
        }
        Ok(Self { n_x, delta, pending_shift: PendingShift::None, pending_dir: None, carried_error: 0.0 })
    }

    pub fn half_range(&self) -> f64 {
        self.n_x * PI
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_range()
    }

    fn near_plus(&self, v: f64) -> bool {
        v >= self.half_range() - self.delta
    }

    fn near_minus(&self, v: f64) -> bool {
        v <= -self.half_range() + self.delta
    }

    /// Records the error carried into the new period.
    pub fn carry_error(&mut self, x_before_reset: f64, xd_before_reset: f64) {
        self.carried_error = xd_before_reset - x_before_reset;
    }

    fn reset(&mut self, branch: Branch, x: f64, xd0: f64, shift: f64) -> Result<WrapEvent> {
        if self.n_x != 1.0 {
            return Err(Error::Validation(format!(
                "half-range channel reached its singular value (x = {x}); the gimbal guard should have stopped this"
            )));
        }
        let p = self.period();
        // express the reference in the state's branch before differencing
        let xd_same = xd0 - p * ((xd0 - x) / p).round();
        self.carry_error(x, xd_same);
        Ok(WrapEvent { branch, x_before: x, x_after: x + shift, carried_error: self.carried_error })
    }

    fn shift_horizon(&self, xd: &mut [f64]) {
        let p = self.period();
        match self.pending_shift {
            PendingShift::Plus => match self.pending_dir {
                // reference already wrapped to the negative side
                Some(Direction::Increasing) => xd.iter_mut().filter(|v| **v < 0.0).for_each(|v| *v += p),
                // reference not yet wrapped to the positive side
                _ => xd.iter_mut().filter(|v| **v <= 0.0).for_each(|v| *v += p),
            },
            PendingShift::Minus => match self.pending_dir {
                Some(Direction::Decreasing) => xd.iter_mut().filter(|v| **v > 0.0).for_each(|v| *v -= p),
                _ => xd.iter_mut().filter(|v| **v >= 0.0).for_each(|v| *v -= p),
            },
            PendingShift::None => {}
        }
    }

    fn clear(&mut self) {
        self.pending_shift = PendingShift::None;
        self.pending_dir = None;
    }

    /// One control period of the strategy. `xd` is the reference horizon with
    /// index 0 at the current instant, each element inside `[-L, L]`; it is
    /// rewritten in place. Returns the (possibly reset) state.
    pub fn wrap_step(&mut self, x: f64, xd: &mut [f64], dir: Direction) -> Result<WrapOutcome> {
        let Some(&xd0) = xd.first() else {
            return Ok(WrapOutcome { x, event: None, cancelled: false });
        };
        let p = self.period();
        let l = self.half_range();
        let mut cancelled = false;
        if self.pending_dir.is_some_and(|d| d != dir) {
            log::warn!("reference direction changed during a pending shift; shift cancelled");
            self.clear();
            cancelled = true;
        }

        let mut x = x;
        let mut event = None;
        match (self.pending_shift, dir) {
            (PendingShift::Plus, Direction::Increasing) => {
                if self.near_plus(x) {
                    event = Some(self.reset(Branch::RefFirstUp, x, xd0 + p, -p)?);
                    x -= p;
                    self.clear();
                    if xd0 >= 0.0 {
                        // the state arrived before the reference actually wrapped
                        self.pending_shift = PendingShift::Minus;
                        self.pending_dir = Some(dir);
                    }
                }
            }
            (PendingShift::Minus, Direction::Increasing) => {
                if xd0 < 0.0 {
                    self.clear();
                }
            }
            (PendingShift::Minus, Direction::Decreasing) => {
                if self.near_minus(x) {
                    event = Some(self.reset(Branch::RefFirstDown, x, xd0 - p, p)?);
                    x += p;
                    self.clear();
                    if xd0 <= 0.0 {
                        self.pending_shift = PendingShift::Plus;
                        self.pending_dir = Some(dir);
                    }
                }
            }
            (PendingShift::Plus, Direction::Decreasing) => {
                if xd0 > 0.0 {
                    self.clear();
                }
            }
            (PendingShift::None, Direction::Increasing) => {
                if self.near_plus(x) {
                    event = Some(self.reset(Branch::StateFirstUp, x, xd0, -p)?);
                    x -= p;
                    if xd0 >= 0.0 {
                        self.pending_shift = PendingShift::Minus;
                        self.pending_dir = Some(dir);
                    }
                } else if self.near_plus(xd0) || (x > 0.0 && xd0 < 0.0 && x - xd0 > l) || crosses(xd, l, 1.0) {
                    if self.n_x != 1.0 {
                        return Err(Error::Validation("half-range reference reached its singular value".into()));
                    }
                    self.pending_shift = PendingShift::Plus;
                    self.pending_dir = Some(dir);
                }
            }
            (PendingShift::None, Direction::Decreasing) => {
                if self.near_minus(x) {
                    event = Some(self.reset(Branch::StateFirstDown, x, xd0, p)?);
                    x += p;
                    if xd0 <= 0.0 {
                        self.pending_shift = PendingShift::Plus;
                        self.pending_dir = Some(dir);
                    }
                } else if self.near_minus(xd0) || (x < 0.0 && xd0 > 0.0 && xd0 - x > l) || crosses(xd, l, -1.0) {
                    if self.n_x != 1.0 {
                        return Err(Error::Validation("half-range reference reached its singular value".into()));
                    }
                    self.pending_shift = PendingShift::Minus;
                    self.pending_dir = Some(dir);
                }
            }
        }
        self.shift_horizon(xd);
        Ok(WrapOutcome { x, event, cancelled })
    }
}

/// Whether the horizon jumps across the singular value in direction `sign`
/// (`+1` from `+l` to `-l`, `-1` the other way) between consecutive entries.
fn crosses(xd: &[f64], l: f64, sign: f64) -> bool {
    xd.windows(2).any(|w| sign * (w[0] - w[1]) > l)
}

/// Direction of a reference horizon from its first increment, using the
/// wrapped difference so a jump across the singular value reads correctly.
pub fn reference_direction(xd: &[f64]) -> Direction {
    match xd {
        [a, b, ..] if angle_diff(*b, *a) < 0.0 => Direction::Decreasing,
        _ => Direction::Increasing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = PI / 360.0;

    fn deg(v: f64) -> f64 {
        v.to_radians()
    }

    fn channel() -> WrapChannel {
        WrapChannel::new(1.0, D).unwrap()
    }

    fn is_period_multiple(d: f64) -> bool {
        let k = d / TAU;
        (k - k.round()).abs() < 1e-12
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_angle(-0.1 - 4.0 * PI) + 0.1).abs() < 1e-12);
        assert!((angle_diff(deg(179.0), deg(-179.0)) - deg(-2.0)).abs() < 1e-12);
    }

    #[test]
    fn interior_case_untouched() {
        let mut ch = channel();
        let mut xd = vec![deg(20.0), deg(21.0)];
        let out = ch.wrap_step(deg(10.0), &mut xd, Direction::Increasing).unwrap();
        assert_eq!(out.x, deg(10.0));
        assert_eq!(xd, vec![deg(20.0), deg(21.0)]);
        assert!(out.event.is_none());
        assert_eq!(ch.pending_shift, PendingShift::None);
    }

    #[test]
    fn reference_first_increasing() {
        let mut ch = channel();
        let mut xd = vec![deg(180.0) - 1e-12, deg(-179.0), deg(-178.0)];
        let out = ch.wrap_step(deg(170.0), &mut xd, Direction::Increasing).unwrap();
        assert_eq!(out.x, deg(170.0));
        assert!(out.event.is_none());
        assert!((xd[1] - deg(181.0)).abs() < 1e-12);
        assert!((xd[2] - deg(182.0)).abs() < 1e-12);
        assert_eq!(ch.pending_shift, PendingShift::Plus);

        // state still short of the neighbourhood: keep shifting
        let mut xd = vec![deg(-179.0), deg(-178.0)];
        let out = ch.wrap_step(deg(179.0), &mut xd, Direction::Increasing).unwrap();
        assert!(out.event.is_none());
        assert!((xd[0] - deg(181.0)).abs() < 1e-12);

        // state enters [179.5, 180]: reset
        let mut xd = vec![deg(-179.8), deg(-178.8)];
        let out = ch.wrap_step(deg(179.6), &mut xd, Direction::Increasing).unwrap();
        let ev = out.event.unwrap();
        assert_eq!(ev.branch, Branch::RefFirstUp);
        assert!((out.x - deg(-180.4)).abs() < 1e-12);
        assert!((ev.carried_error - deg(0.6)).abs() < 1e-12);
        assert_eq!(xd, vec![deg(-179.8), deg(-178.8)]);
        assert_eq!(ch.pending_shift, PendingShift::None);
    }

    #[test]
    fn crossing_in_the_horizon_tail_is_shifted_early() {
        let mut ch = channel();
        let mut xd = vec![deg(170.0), deg(175.0), deg(-180.0), deg(-175.0)];
        let out = ch.wrap_step(deg(168.0), &mut xd, Direction::Increasing).unwrap();
        assert!(out.event.is_none());
        assert_eq!(ch.pending_shift, PendingShift::Plus);
        let want = [170.0, 175.0, 180.0, 185.0];
        assert!(xd.iter().zip(want).all(|(a, b)| (a - deg(b)).abs() < 1e-12), "{xd:?}");

        let mut xd = vec![deg(10.0), deg(5.0), deg(-5.0)];
        ch = channel();
        ch.wrap_step(deg(0.0), &mut xd, Direction::Decreasing).unwrap();
        assert_eq!(ch.pending_shift, PendingShift::None);
        let mut xd = vec![deg(-175.0), deg(-180.0) + 1e-9, deg(175.0)];
        ch.wrap_step(deg(-170.0), &mut xd, Direction::Decreasing).unwrap();
        assert_eq!(ch.pending_shift, PendingShift::Minus);
        assert!((xd[2] - deg(-185.0)).abs() < 1e-12);
    }

    #[test]
    fn state_first_increasing() {
        let mut ch = channel();
        let mut xd = vec![deg(170.0), deg(171.0)];
        let out = ch.wrap_step(deg(180.0), &mut xd, Direction::Increasing).unwrap();
        let ev = out.event.unwrap();
        assert_eq!(ev.branch, Branch::StateFirstUp);
        assert!((out.x - deg(-180.0)).abs() < 1e-12);
        assert!((xd[0] - deg(-190.0)).abs() < 1e-12);
        assert!((xd[1] - deg(-189.0)).abs() < 1e-12);
        assert!((ev.carried_error - deg(-10.0)).abs() < 1e-12);
        assert_eq!(ch.pending_shift, PendingShift::Minus);

        // reference still positive: keep shifting the unwrapped part only
        let mut xd = vec![deg(179.9), deg(-179.9)];
        ch.wrap_step(deg(-179.0), &mut xd, Direction::Increasing).unwrap();
        assert!((xd[0] - deg(-180.1)).abs() < 1e-12);
        assert!((xd[1] - deg(-179.9)).abs() < 1e-12);

        // reference wrapped: shift ends
        let mut xd = vec![deg(-179.9), deg(-179.0)];
        let out = ch.wrap_step(deg(-178.9), &mut xd, Direction::Increasing).unwrap();
        assert!(out.event.is_none());
        assert_eq!(xd, vec![deg(-179.9), deg(-179.0)]);
        assert_eq!(ch.pending_shift, PendingShift::None);
    }

    #[test]
    fn reference_first_decreasing() {
        let mut ch = channel();
        let mut xd = vec![deg(-179.7), deg(179.0)];
        ch.wrap_step(deg(-170.0), &mut xd, Direction::Decreasing).unwrap();
        assert!((xd[1] - deg(-181.0)).abs() < 1e-12);
        assert_eq!(ch.pending_shift, PendingShift::Minus);
        let mut xd = vec![deg(179.0)];
        let out = ch.wrap_step(deg(-179.8), &mut xd, Direction::Decreasing).unwrap();
        let ev = out.event.unwrap();
        assert_eq!(ev.branch, Branch::RefFirstDown);
        assert!((out.x - deg(180.2)).abs() < 1e-12);
        assert!((ev.carried_error - deg(-1.2)).abs() < 1e-12);
        assert_eq!(xd, vec![deg(179.0)]);
    }

    #[test]
    fn state_first_decreasing() {
        let mut ch = channel();
        let mut xd = vec![deg(-170.0), deg(-171.0)];
        let out = ch.wrap_step(deg(-179.9), &mut xd, Direction::Decreasing).unwrap();
        assert_eq!(out.event.unwrap().branch, Branch::StateFirstDown);
        assert!((out.x - deg(180.1)).abs() < 1e-12);
        assert!((xd[0] - deg(190.0)).abs() < 1e-12);
        assert_eq!(ch.pending_shift, PendingShift::Plus);
        let mut xd = vec![deg(179.5)];
        ch.wrap_step(deg(179.0), &mut xd, Direction::Decreasing).unwrap();
        assert_eq!(xd, vec![deg(179.5)]);
        assert_eq!(ch.pending_shift, PendingShift::None);
    }

    #[test]
    fn exact_arrival_carries_zero() {
        let mut ch = channel();
        let mut xd = vec![PI];
        let out = ch.wrap_step(PI, &mut xd, Direction::Increasing).unwrap();
        assert_eq!(out.event.unwrap().carried_error, 0.0);
    }

    #[test]
    fn carry_error_by_subtraction() {
        let mut ch = channel();
        ch.carry_error(deg(179.6), deg(180.0));
        assert!((ch.carried_error - deg(0.4)).abs() < 1e-12);
    }

    #[test]
    fn direction_flip_cancels() {
        let mut ch = channel();
        let mut xd = vec![deg(179.8), deg(-179.9)];
        ch.wrap_step(deg(170.0), &mut xd, Direction::Increasing).unwrap();
        assert_eq!(ch.pending_shift, PendingShift::Plus);
        let mut xd = vec![deg(179.0), deg(178.0)];
        let out = ch.wrap_step(deg(171.0), &mut xd, Direction::Decreasing).unwrap();
        assert!(out.cancelled);
        assert_eq!(ch.pending_shift, PendingShift::None);
        assert_eq!(xd, vec![deg(179.0), deg(178.0)]);
    }

    #[test]
    fn half_range_channel_refuses_to_wrap() {
        let mut ch = WrapChannel::new(0.5, D).unwrap();
        let mut xd = vec![0.0];
        assert!(ch.wrap_step(PI / 2.0, &mut xd, Direction::Increasing).is_err());
        let mut xd = vec![0.1];
        assert!(ch.wrap_step(0.2, &mut xd, Direction::Increasing).unwrap().event.is_none());
    }

    #[test]
    fn direction_from_wrapped_increment() {
        assert_eq!(reference_direction(&[deg(179.9), deg(-179.9)]), Direction::Increasing);
        assert_eq!(reference_direction(&[deg(-179.9), deg(179.9)]), Direction::Decreasing);
        assert_eq!(reference_direction(&[0.3]), Direction::Increasing);
    }

    /// Closed-loop surrogate: the state moves with the reference at a fixed
    /// offset. Every branch must keep the represented pose and the error must
    /// stay continuous.
    fn sweep(rate: f64, offset: f64) -> Vec<Branch> {
        let mut ch = channel();
        let mut branches = Vec::new();
        let raw = |k: usize| wrap_angle(deg(150.0) * rate.signum() + rate * k as f64);
        let mut x = raw(0) + offset;
        let mut last_err: Option<f64> = None;
        for k in 0..400 {
            let mut xd: Vec<f64> = (0..5).map(|i| raw(k + i)).collect();
            let orig = xd.clone();
            let out = ch.wrap_step(x, &mut xd, reference_direction(&orig)).unwrap();
            assert!(is_period_multiple(out.x - x));
            for (a, b) in xd.iter().zip(&orig) {
                assert!(is_period_multiple(a - b));
            }
            if let Some(ev) = out.event {
                branches.push(ev.branch);
            }
            let err = xd[0] - out.x;
            if let Some(prev) = last_err {
                assert!((err - prev).abs() <= 2.0 * D + rate.abs() + 1e-12, "k={k} {prev} -> {err}");
            }
            last_err = Some(err);
            x = out.x + angle_diff(orig[1], orig[0]);
        }
        branches
    }

    #[test]
    fn monotone_sweeps_cover_all_branches() {
        let step = deg(0.3);
        assert_eq!(sweep(step, -deg(2.0)), vec![Branch::RefFirstUp]);
        assert_eq!(sweep(step, deg(2.0)), vec![Branch::StateFirstUp]);
        assert_eq!(sweep(-step, deg(2.0)), vec![Branch::RefFirstDown]);
        assert_eq!(sweep(-step, -deg(2.0)), vec![Branch::StateFirstDown]);
    }
}
