//! Zero-order-hold discretisation, stacked horizon operators, the sampling
//! correction and the condensed quadratic cost in the input increments.
//!
//! Over a horizon of `np` steps with `nc` free moves the predictions are
//!
//! ```text
//! x* = A* x_k + Bs (Lambda u_prev + Gamma du),   Bs = B* + B* W*
//! ```
//!
//! where `B*` keeps the first `nc` input blocks of the convolution operator
//! (inputs beyond the control horizon are zero) and `W*` is block-diagonal.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub ts: f64,
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `Ad = exp(Ac ts)` and `Bd = int_0^ts exp(Ac tau) dtau Bc`, read off the
/// exponential of the augmented matrix `[[Ac, Bc], [0, 0]] ts`.
pub fn discretize(ac: &DMatrix<f64>, bc: &DMatrix<f64>, ts: f64) -> Result<DiscreteModel> {
    let n = ac.nrows();
    let m = bc.ncols();
    if ac.ncols() != n {
        return Err(Error::DimensionMismatch { context: "discretize Ac", expected: n, got: ac.ncols() });
    }
    if bc.nrows() != n {
        return Err(Error::DimensionMismatch { context: "discretize Bc", expected: n, got: bc.nrows() });
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::Validation(format!("sampling interval must be > 0, got {ts}")));
    }
    check_finite(ac, "Ac")?;
    check_finite(bc, "Bc")?;
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * ts));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * ts));
    let e = aug.exp();
    let model = DiscreteModel {
        ad: e.view((0, 0), (n, n)).into_owned(),
        bd: e.view((0, n), (n, m)).into_owned(),
        ts,
    };
    check_finite(&model.ad, "Ad")?;
    Ok(model)
}

/// Stacked horizon operators.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionOperators {
    /// `(n np) x n`, block `i` is `A(k+i) ... A(k)`.
    pub astar: DMatrix<f64>,
    /// `(n np) x (m np)` block-lower-triangular convolution operator.
    pub bbar: DMatrix<f64>,
    /// First `m nc` columns of `bbar`.
    pub bstar: DMatrix<f64>,
    /// `(m nc) x m` column of identities.
    pub lambda: DMatrix<f64>,
    /// `(m nc) x (m nc)` lower-block-triangular identities.
    pub gamma: DMatrix<f64>,
    /// `(m nc) x (m nc)` block-diagonal sampling correction.
    pub wstar: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub np: usize,
    pub nc: usize,
}

pub fn build_operators(models: &[DiscreteModel], nc: usize) -> Result<PredictionOperators> {
    let np = models.len();
    if np == 0 {
        return Err(Error::DimensionMismatch { context: "prediction horizon", expected: 1, got: 0 });
    }
    if nc == 0 || nc > np {
        return Err(Error::Validation(format!("control horizon must satisfy 1 <= nc <= np, got nc = {nc}, np = {np}")));
    }
    let n = models[0].ad.nrows();
    let m = models[0].bd.ncols();
    for md in models {
        if md.ad.shape() != (n, n) {
            return Err(Error::DimensionMismatch { context: "horizon Ad", expected: n, got: md.ad.nrows() });
        }
        if md.bd.shape() != (n, m) {
            return Err(Error::DimensionMismatch { context: "horizon Bd", expected: m, got: md.bd.ncols() });
        }
    }

    let mut astar = DMatrix::zeros(n * np, n);
    let mut acc = DMatrix::identity(n, n);
    for (i, md) in models.iter().enumerate() {
        acc = &md.ad * acc;
        astar.view_mut((i * n, 0), (n, n)).copy_from(&acc);
    }

    let mut bbar = DMatrix::zeros(n * np, m * np);
    for j in 0..np {
        let mut blk = models[j].bd.clone();
        bbar.view_mut((j * n, j * m), (n, m)).copy_from(&blk);
        for i in j + 1..np {
            blk = &models[i].ad * blk;
            bbar.view_mut((i * n, j * m), (n, m)).copy_from(&blk);
        }
    }
    let bstar = bbar.columns(0, m * nc).into_owned();

    let mut lambda = DMatrix::zeros(m * nc, m);
    let mut gamma = DMatrix::zeros(m * nc, m * nc);
    for i in 0..nc {
        lambda.view_mut((i * m, 0), (m, m)).fill_with_identity();
        for j in 0..=i {
            gamma.view_mut((i * m, j * m), (m, m)).fill_with_identity();
        }
    }

    Ok(PredictionOperators {
        astar,
        bbar,
        bstar,
        lambda,
        gamma,
        wstar: DMatrix::zeros(m * nc, m * nc),
        n,
        m,
        np,
        nc,
    })
}

impl PredictionOperators {
    /// Installs the sampling blocks `W(k), ..., W(k+nc-1)` on the diagonal of `W*`.
    pub fn set_sampling(&mut self, blocks: &[DMatrix<f64>]) -> Result<()> {
        if blocks.len() != self.nc {
            return Err(Error::DimensionMismatch { context: "sampling blocks", expected: self.nc, got: blocks.len() });
        }
        self.wstar.fill(0.0);
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != (self.m, self.m) {
                return Err(Error::DimensionMismatch { context: "sampling block", expected: self.m, got: b.nrows() });
            }
            self.wstar.view_mut((i * self.m, i * self.m), (self.m, self.m)).copy_from(b);
        }
        Ok(())
    }

    /// `B* + B* W*`, exploiting the block-diagonal `W*`.
    pub fn sampled_input_matrix(&self) -> DMatrix<f64> {
        let mut bs = self.bstar.clone();
        let rows = self.n * self.np;
        for j in 0..self.nc {
            let w = self.wstar.view((j * self.m, j * self.m), (self.m, self.m));
            if w.iter().all(|v| *v == 0.0) {
                continue;
            }
            let corr = self.bstar.view((0, j * self.m), (rows, self.m)) * w;
            let mut col = bs.view_mut((0, j * self.m), (rows, self.m));
            col += corr;
        }
        bs
    }
}

/// `sign` with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `W = r diag(ws) diag(accel_signs) diag(input_signs)` with a single uniform
/// draw `r` in `[0, 1)`. The draw happens even when `ws = 0` so that the
/// random stream does not depend on the mode.
pub fn sampling_block<R: Rng + ?Sized>(
    ws: &[f64; 3],
    accel_signs: &Vector3<f64>,
    input_signs: &Vector3<f64>,
    rng: &mut R,
) -> Matrix3<f64> {
    let r: f64 = rng.random();
    Matrix3::from_diagonal(&Vector3::from_fn(|i, _| r * ws[i] * accel_signs[i] * input_signs[i]))
}

/// Affine map from the increments to the stacked predictions:
/// `x* = base + m du`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub base: DVector<f64>,
    pub m: DMatrix<f64>,
    pub n: usize,
    pub np: usize,
}

impl Prediction {
    pub fn states(&self, du: &DVector<f64>) -> DVector<f64> {
        &self.base + &self.m * du
    }

    /// Row of the stacked prediction holding coordinate `idx` at horizon step
    /// `i` (0-based, i.e. time `k+i+1`).
    pub fn row(&self, i: usize, idx: usize) -> usize {
        i * self.n + idx
    }
}

pub fn condense(ops: &PredictionOperators, x_k: &DVector<f64>, u_prev: &DVector<f64>) -> Result<Prediction> {
    if x_k.len() != ops.n {
        return Err(Error::DimensionMismatch { context: "condense state", expected: ops.n, got: x_k.len() });
    }
    if u_prev.len() != ops.m {
        return Err(Error::DimensionMismatch { context: "condense input", expected: ops.m, got: u_prev.len() });
    }
    let bs = ops.sampled_input_matrix();
    let rows = ops.n * ops.np;
    // Bs Gamma: column block j is the sum of the column blocks l >= j of Bs
    let mut m = DMatrix::zeros(rows, ops.m * ops.nc);
    let mut run = DMatrix::zeros(rows, ops.m);
    for j in (0..ops.nc).rev() {
        run += bs.view((0, j * ops.m), (rows, ops.m));
        m.view_mut((0, j * ops.m), (rows, ops.m)).copy_from(&run);
    }
    // Bs Lambda = first column block of Bs Gamma
    let base = &ops.astar * x_k + &run * u_prev;
    Ok(Prediction { base, m, n: ops.n, np: ops.np })
}

/// `0.5 du' H du + f' du + c0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedCost {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub c0: f64,
}

impl CondensedCost {
    pub fn eval(&self, du: &DVector<f64>) -> f64 {
        0.5 * du.dot(&(&self.h * du)) + self.f.dot(du) + self.c0
    }
}

/// Cost with stage weights `q` on every predicted state and `p` on every
/// increment, i.e. `Qt = diag(q, ..., q)` and `Pt = diag(p, ..., p)`.
pub fn cost_from_prediction(
    pred: &Prediction,
    xd_star: &DVector<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<CondensedCost> {
    let rows = pred.base.len();
    if xd_star.len() != rows {
        return Err(Error::DimensionMismatch { context: "stacked reference", expected: rows, got: xd_star.len() });
    }
    if q.shape() != (pred.n, pred.n) {
        return Err(Error::DimensionMismatch { context: "state weight", expected: pred.n, got: q.nrows() });
    }
    let nu = pred.m.ncols();
    let mu = p.nrows();
    if p.shape() != (mu, mu) || mu == 0 || !nu.is_multiple_of(mu) {
        return Err(Error::DimensionMismatch { context: "input weight", expected: mu, got: p.ncols() });
    }
    let e = xd_star - &pred.base;
    let mut qm = DMatrix::zeros(rows, nu);
    let mut qe = DVector::zeros(rows);
    for i in 0..pred.np {
        let r = i * pred.n;
        qm.view_mut((r, 0), (pred.n, nu)).copy_from(&(q * pred.m.view((r, 0), (pred.n, nu))));
        qe.rows_mut(r, pred.n).copy_from(&(q * e.rows(r, pred.n)));
    }
    let mut h = pred.m.tr_mul(&qm);
    for i in 0..nu / mu {
        let mut blk = h.view_mut((i * mu, i * mu), (mu, mu));
        blk += p;
    }
    h *= 2.0;
    // symmetrise away round-off
    let h = (&h + h.transpose()) * 0.5;
    let f = pred.m.tr_mul(&qe) * -2.0;
    Ok(CondensedCost { h, f, c0: e.dot(&qe) })
}

pub fn assemble_cost(
    ops: &PredictionOperators,
    x_k: &DVector<f64>,
    u_prev: &DVector<f64>,
    xd_star: &DVector<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<CondensedCost> {
    cost_from_prediction(&condense(ops, x_k, u_prev)?, xd_star, q, p)
}
