//! Dense strictly convex QP
//!
//! ```text
//! minimise 0.5 z' H z + f' z   subject to   G z <= g
//! ```
//!
//! solved with the Goldfarb-Idnani dual active-set method: start from the
//! unconstrained minimiser and add the most violated row until the iterate is
//! primal feasible, keeping a factorisation `J' N = [R; 0]` of the active
//! normals current with Givens rotations. Infeasibility is detected when a
//! violated row can be neither reached in primal space nor paid for by
//! dropping active rows.
//!
//! When a problem is infeasible and some rows are marked soft, it is solved
//! again with one nonnegative slack per soft row, penalised by `w s^2 / 2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub g_mat: DMatrix<f64>,
    pub g: DVector<f64>,
    /// Rows that may be relaxed when the hard problem is infeasible.
    pub soft_rows: Vec<usize>,
    pub slack_weight: f64,
}

impl QpProblem {
    pub fn unconstrained(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        Self { h, f, g_mat: DMatrix::zeros(0, n), g: DVector::zeros(0), soft_rows: Vec::new(), slack_weight: 1e6 }
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.f.dot(z)
    }

    fn check(&self) -> Result<()> {
        let n = self.f.len();
        if self.h.shape() != (n, n) {
            return Err(Error::DimensionMismatch { context: "QP Hessian", expected: n, got: self.h.nrows() });
        }
        if self.g_mat.ncols() != n && self.g_mat.nrows() > 0 {
            return Err(Error::DimensionMismatch { context: "QP constraint matrix", expected: n, got: self.g_mat.ncols() });
        }
        if self.g_mat.nrows() != self.g.len() {
            return Err(Error::DimensionMismatch { context: "QP constraint rows", expected: self.g_mat.nrows(), got: self.g.len() });
        }
        if let Some(&r) = self.soft_rows.iter().find(|&&r| r >= self.g.len()) {
            return Err(Error::DimensionMismatch { context: "QP soft row", expected: self.g.len(), got: r });
        }
        let asym = (&self.h - self.h.transpose()).amax();
        if asym > 1e-10 * self.h.amax().max(1.0) {
            return Err(Error::Validation(format!("QP Hessian is not symmetric (max asymmetry {asym:e})")));
        }
        if self.h.iter().chain(self.f.iter()).chain(self.g_mat.iter()).chain(self.g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("QP data"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    RelaxedOptimal,
    Infeasible,
    MaxIter,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::RelaxedOptimal => "relaxed_optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `|H z + f + G' lambda|_inf`
    pub stationarity: f64,
    /// `max(0, max_i (G z - g)_i)`
    pub primal: f64,
    /// `max_i |lambda_i (G z - g)_i|`
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub status: QpStatus,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub active_set: Vec<usize>,
    /// One multiplier per constraint row, zero for inactive rows.
    pub multipliers: DVector<f64>,
    /// Slack per soft row after relaxation, empty otherwise.
    pub slacks: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

pub fn kkt_residuals(p: &QpProblem, z: &DVector<f64>, lambda: &DVector<f64>) -> KktResiduals {
    let mut grad = &p.h * z + &p.f;
    if !p.g.is_empty() {
        grad += p.g_mat.tr_mul(lambda);
    }
    let viol = if !p.g.is_empty() { &p.g_mat * z - &p.g } else { DVector::zeros(0) };
    KktResiduals {
        stationarity: grad.amax(),
        primal: viol.iter().fold(0.0f64, |a, v| a.max(*v)),
        complementarity: viol.iter().zip(lambda.iter()).fold(0.0f64, |a, (v, l)| a.max((v * l).abs())),
    }
}

struct DualSolve {
    z: DVector<f64>,
    active: Vec<usize>,
    u: Vec<f64>,
    iterations: usize,
    status: QpStatus,
}

/// Working factorisation of the active set.
struct Factor {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
}

impl Factor {
    fn add(&mut self, d: &mut DVector<f64>) -> bool {
        let n = self.j.nrows();
        let q = self.q;
        for k in (q + 1..n).rev() {
            let (a, b) = (d[k - 1], d[k]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            d[k - 1] = h;
            d[k] = 0.0;
            for row in 0..n {
                let (ja, jb) = (self.j[(row, k - 1)], self.j[(row, k)]);
                self.j[(row, k - 1)] = c * ja + s * jb;
                self.j[(row, k)] = -s * ja + c * jb;
            }
        }
        for row in 0..=q {
            self.r[(row, q)] = d[row];
        }
        self.q += 1;
        let scale = (0..=q).map(|i| self.r[(i, i)].abs()).fold(1.0f64, f64::max);
        d[q].abs() > f64::EPSILON * scale
    }

    fn drop(&mut self, pos: usize) {
        let n = self.j.nrows();
        let q = self.q;
        for col in pos..q - 1 {
            for row in 0..=col + 1 {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        self.q -= 1;
        let q = self.q;
        for k in pos..q {
            let (a, b) = (self.r[(k, k)], self.r[(k + 1, k)]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            self.r[(k, k)] = h;
            self.r[(k + 1, k)] = 0.0;
            for col in k + 1..q {
                let (ra, rb) = (self.r[(k, col)], self.r[(k + 1, col)]);
                self.r[(k, col)] = c * ra + s * rb;
                self.r[(k + 1, col)] = -s * ra + c * rb;
            }
            for row in 0..n {
                let (ja, jb) = (self.j[(row, k)], self.j[(row, k + 1)]);
                self.j[(row, k)] = c * ja + s * jb;
                self.j[(row, k + 1)] = -s * ja + c * jb;
            }
        }
    }

    /// Solves `R[..q, ..q] x = d[..q]`.
    fn back_substitute(&self, d: &DVector<f64>) -> Vec<f64> {
        let q = self.q;
        let mut x = vec![0.0; q];
        for i in (0..q).rev() {
            let mut s = d[i];
            for k in i + 1..q {
                s -= self.r[(i, k)] * x[k];
            }
            x[i] = s / self.r[(i, i)];
        }
        x
    }
}

fn dual_active_set(p: &QpProblem, tol: f64, max_iter: usize) -> Result<DualSolve> {
    let n = p.f.len();
    let rows = p.g.len();
    let chol = p.h.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let linv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite)?;
    let mut fac = Factor { j: linv.transpose(), r: DMatrix::zeros(n, n), q: 0 };
    let mut z = -chol.solve(&p.f);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut is_active = vec![false; rows];
    let row_norm: Vec<f64> = (0..rows).map(|i| p.g_mat.row(i).norm()).collect();
    let mut iterations = 0;

    loop {
        // most violated inactive row, measured as distance to its hyperplane
        let mut pick: Option<(usize, f64)> = None;
        for i in (0..rows).filter(|&i| !is_active[i]) {
            let v = p.g_mat.row(i).dot(&z.transpose()) - p.g[i];
            if v > tol * (1.0 + p.g[i].abs()) {
                let score = v / row_norm[i].max(f64::MIN_POSITIVE);
                if pick.is_none_or(|(_, s)| score > s) {
                    pick = Some((i, score));
                }
            }
        }
        let Some((pr, _)) = pick else {
            return Ok(DualSolve { z, active, u, iterations, status: QpStatus::Optimal });
        };
        // normal of the row in ">=" form: -G_p z >= -g_p
        let normal: DVector<f64> = -p.g_mat.row(pr).transpose();
        let b = -p.g[pr];
        let mut u_plus = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Ok(DualSolve { z, active, u, iterations: iterations - 1, status: QpStatus::MaxIter });
            }
            let mut d = fac.j.tr_mul(&normal);
            let q = fac.q;
            let step = fac.j.columns(q, n - q) * d.rows(q, n - q);
            let rvec = fac.back_substitute(&d);

            let mut t1 = f64::INFINITY;
            let mut drop_pos = None;
            for (k, &rk) in rvec.iter().enumerate() {
                if rk > 0.0 {
                    let t = u[k] / rk;
                    if t < t1 {
                        t1 = t;
                        drop_pos = Some(k);
                    }
                }
            }
            let slack = normal.dot(&z) - b;
            let curvature = step.dot(&normal);
            let t2 = if step.amax() > 1e-14 * normal.amax().max(1.0) && curvature > 0.0 {
                -slack / curvature
            } else {
                f64::INFINITY
            };

            if t1.is_infinite() && t2.is_infinite() {
                return Ok(DualSolve { z, active, u, iterations, status: QpStatus::Infeasible });
            }
            if t2.is_infinite() {
                for (uk, rk) in u.iter_mut().zip(&rvec) {
                    *uk -= t1 * rk;
                }
                u_plus += t1;
                let pos = drop_pos.expect("finite partial step has a blocking row");
                is_active[active[pos]] = false;
                active.remove(pos);
                u.remove(pos);
                fac.drop(pos);
                continue;
            }
            let t = t1.min(t2);
            z += &step * t;
            for (uk, rk) in u.iter_mut().zip(&rvec) {
                *uk -= t * rk;
            }
            u_plus += t;
            if t2 <= t1 {
                if !fac.add(&mut d) {
                    // numerically dependent on the active set; treat as satisfied
                    fac.q -= 1;
                    is_active[pr] = true;
                    break;
                }
                active.push(pr);
                u.push(u_plus);
                is_active[pr] = true;
                break;
            }
            let pos = drop_pos.expect("partial step has a blocking row");
            is_active[active[pos]] = false;
            active.remove(pos);
            u.remove(pos);
            fac.drop(pos);
        }
    }
}

fn finish(p: &QpProblem, ds: &DualSolve) -> (DVector<f64>, KktResiduals) {
    let mut lambda = DVector::zeros(p.g.len());
    for (&row, &uk) in ds.active.iter().zip(&ds.u) {
        lambda[row] = uk.max(0.0);
    }
    let kkt = kkt_residuals(p, &ds.z, &lambda);
    (lambda, kkt)
}

/// Solves the QP, relaxing the soft rows if the hard problem is infeasible.
pub fn solve(p: &QpProblem, settings: &QpSettings) -> Result<QpSolution> {
    p.check()?;
    let ds = dual_active_set(p, settings.tol, settings.max_iter)?;
    if ds.status != QpStatus::Infeasible || p.soft_rows.is_empty() {
        let (multipliers, kkt) = finish(p, &ds);
        return Ok(QpSolution {
            z: ds.z,
            status: ds.status,
            kkt,
            iterations: ds.iterations,
            active_set: ds.active,
            multipliers,
            slacks: Vec::new(),
        });
    }
    let first_iterations = ds.iterations;
    let relaxed = relaxed_problem(p);
    let rs = dual_active_set(&relaxed, settings.tol, settings.max_iter)?;
    let n = p.f.len();
    let (lambda_aug, kkt_aug) = finish(&relaxed, &rs);
    let status = match rs.status {
        QpStatus::Optimal => QpStatus::RelaxedOptimal,
        other => other,
    };
    Ok(QpSolution {
        z: rs.z.rows(0, n).into_owned(),
        status,
        kkt: kkt_aug,
        iterations: first_iterations + rs.iterations,
        active_set: rs.active.iter().copied().filter(|&r| r < p.g.len()).collect(),
        multipliers: lambda_aug.rows(0, p.g.len()).into_owned(),
        slacks: rs.z.rows(n, p.soft_rows.len()).iter().copied().collect(),
    })
}

/// Appends one slack per soft row: `G_i z - s_i <= g_i`, `s >= 0`, with cost
/// `w s^2 / 2`. The unconstrained slack minimum is zero, so the dual method
/// starts with every bound row satisfied and `s_i = lambda_i / w` at the
/// optimum.
fn relaxed_problem(p: &QpProblem) -> QpProblem {
    let n = p.f.len();
    let ns = p.soft_rows.len();
    let rows = p.g.len();
    let w = p.slack_weight;
    let mut h = DMatrix::zeros(n + ns, n + ns);
    h.view_mut((0, 0), (n, n)).copy_from(&p.h);
    h.view_mut((n, n), (ns, ns)).fill_diagonal(w);
    let mut f = DVector::zeros(n + ns);
    f.rows_mut(0, n).copy_from(&p.f);
    let mut gm = DMatrix::zeros(rows + ns, n + ns);
    gm.view_mut((0, 0), (rows, n)).copy_from(&p.g_mat);
    let mut g = DVector::zeros(rows + ns);
    g.rows_mut(0, rows).copy_from(&p.g);
    for (k, &row) in p.soft_rows.iter().enumerate() {
        gm[(row, n + k)] = -1.0;
        gm[(rows + k, n + k)] = -1.0;
    }
    QpProblem { h, f, g_mat: gm, g, soft_rows: Vec::new(), slack_weight: w }
}

/// Flat text dump for offline debugging. Sections `H`, `f`, `G`, `g` follow a
/// `n rows` header; matrices are row-major, one row per line, entries
/// separated by single spaces in shortest round-trip decimal form.
pub fn dump(p: &QpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", p.f.len(), p.g.len());
    let write_matrix = |out: &mut String, name: &str, m: &DMatrix<f64>| {
        let _ = writeln!(out, "{name}");
        for row in m.row_iter() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    };
    write_matrix(&mut out, "H", &p.h);
    let _ = writeln!(out, "f");
    let _ = writeln!(out, "{}", p.f.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    write_matrix(&mut out, "G", &p.g_mat);
    let _ = writeln!(out, "g");
    let _ = writeln!(out, "{}", p.g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    out
}
