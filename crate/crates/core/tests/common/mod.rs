//! Independent oracles shared by the oracle, property and acceptance tests.
//!
//! Each oracle recomputes a library quantity by a different route: a truncated
//! Taylor series for the matrix exponential, an explicit step-by-step state
//! recursion for the stacked predictions, a direct sum for the horizon cost
//! and exhaustive enumeration of active sets for the QP.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwa_rendezvous::prediction::{
    build_operators, condense, cost_from_prediction, discretize, DiscreteModel,
};
use pwa_rendezvous::qp::{solve, QpProblem, QpSettings, QpStatus};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// `Ad = sum (A ts)^k / k!`, `Bd = sum A^k ts^(k+1) / (k+1)! B`, summed until
/// the terms stop contributing.
pub fn series_discretize(ac: &DMatrix<f64>, bc: &DMatrix<f64>, ts: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ac.nrows();
    let mut ad = DMatrix::identity(n, n);
    let mut phi = DMatrix::identity(n, n) * ts;
    let mut term_a = DMatrix::identity(n, n);
    let mut term_p = DMatrix::identity(n, n) * ts;
    for k in 1..60 {
        term_a = &term_a * ac * (ts / k as f64);
        term_p = &term_p * ac * (ts / (k + 1) as f64);
        ad += &term_a;
        phi += &term_p;
        if term_a.amax() < 1e-20 && term_p.amax() < 1e-20 {
            break;
        }
    }
    (ad, phi * bc)
}

/// Largest relative discrepancy between `discretize` and the series over
/// `cases` random 6x6 systems with `|Ac ts| <= 1`.
pub fn discretize_oracle(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let ts = r.random_range(0.01..1.0);
        let mut ac = random_matrix(&mut r, 6, 6, 1.0);
        let target = r.random_range(0.05..1.0);
        ac *= target / (ac.norm() * ts);
        let bc = random_matrix(&mut r, 6, 3, 2.0);
        let d = discretize(&ac, &bc, ts).unwrap();
        let (ad, bd) = series_discretize(&ac, &bc, ts);
        worst = worst.max(rel_err(&d.ad, &ad)).max(rel_err(&d.bd, &bd));
    }
    worst
}

pub struct PredictionCase {
    pub models: Vec<DiscreteModel>,
    pub nc: usize,
    pub w: Vec<DMatrix<f64>>,
    pub x0: DVector<f64>,
    pub u_prev: DVector<f64>,
    pub du: DVector<f64>,
}

pub fn random_prediction_case(r: &mut ChaCha8Rng) -> PredictionCase {
    let n = r.random_range(1..=6);
    let m = r.random_range(1..=3);
    let np = r.random_range(1..=5);
    let nc = r.random_range(1..=np);
    let models = (0..np)
        .map(|_| DiscreteModel { ad: random_matrix(r, n, n, 1.0), bd: random_matrix(r, n, m, 1.0), ts: 0.1 })
        .collect();
    let w = (0..nc)
        .map(|_| DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| r.random_range(-0.5..0.5))))
        .collect();
    PredictionCase {
        models,
        nc,
        w,
        x0: random_vector(r, n, 2.0),
        u_prev: random_vector(r, m, 1.0),
        du: random_vector(r, m * nc, 1.0),
    }
}

/// Explicit recursion `x(i+1) = A(i) x(i) + B(i) (I + W(i)) u(i)` with
/// `u(i) = u_prev + du(0) + ... + du(i)` inside the control horizon and zero
/// beyond it.
pub fn recursion(c: &PredictionCase) -> Vec<DVector<f64>> {
    let m = c.u_prev.len();
    let mut x = c.x0.clone();
    let mut u = c.u_prev.clone();
    let mut out = Vec::new();
    for (i, md) in c.models.iter().enumerate() {
        let applied = if i < c.nc {
            u += c.du.rows(i * m, m);
            &u + &c.w[i] * &u
        } else {
            DVector::zeros(m)
        };
        x = &md.ad * &x + &md.bd * applied;
        out.push(x.clone());
    }
    out
}

/// Largest relative discrepancy between the stacked predictions and the
/// recursion.
pub fn prediction_oracle(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let c = random_prediction_case(&mut r);
        let mut ops = build_operators(&c.models, c.nc).unwrap();
        ops.set_sampling(&c.w).unwrap();
        let stacked = condense(&ops, &c.x0, &c.u_prev).unwrap().states(&c.du);
        let n = c.x0.len();
        for (i, x) in recursion(&c).iter().enumerate() {
            let got = stacked.rows(i * n, n);
            worst = worst.max((got - x).norm() / x.norm().max(1.0));
        }
    }
    worst
}

/// Largest relative discrepancy between the condensed cost and the direct sum
/// `sum (xd - x)' Q (xd - x) + sum du' P du` along the recursion.
pub fn cost_oracle(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let c = random_prediction_case(&mut r);
        let n = c.x0.len();
        let m = c.u_prev.len();
        let np = c.models.len();
        let mut ops = build_operators(&c.models, c.nc).unwrap();
        ops.set_sampling(&c.w).unwrap();
        let pred = condense(&ops, &c.x0, &c.u_prev).unwrap();
        let q = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| r.random_range(0.1..10.0)));
        let p = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| r.random_range(0.1..10.0)));
        let xd = random_vector(&mut r, n * np, 3.0);
        let cost = cost_from_prediction(&pred, &xd, &q, &p).unwrap();

        let mut direct = 0.0;
        for (i, x) in recursion(&c).iter().enumerate() {
            let e = xd.rows(i * n, n) - x;
            direct += e.dot(&(&q * &e));
        }
        for i in 0..c.nc {
            let d = c.du.rows(i * m, m);
            direct += d.dot(&(&p * d));
        }
        worst = worst.max((cost.eval(&c.du) - direct).abs() / direct.abs().max(1.0));
    }
    worst
}

pub struct EnumeratedQp {
    pub z: DVector<f64>,
    pub objective: f64,
}

/// Exhaustive active-set search: solves the equality-constrained KKT system
/// for every subset of rows with at most `n` elements and keeps the best
/// primal- and dual-feasible candidate. `None` if no candidate is feasible.
pub fn enumerate_qp(p: &QpProblem) -> Option<EnumeratedQp> {
    let n = p.f.len();
    let rows = p.g.len();
    let tol = 1e-9;
    let mut best: Option<EnumeratedQp> = None;
    for mask in 0u32..(1 << rows) {
        let set: Vec<usize> = (0..rows).filter(|i| mask & (1 << i) != 0).collect();
        if set.len() > n {
            continue;
        }
        let k = set.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.h);
        rhs.rows_mut(0, n).copy_from(&(-&p.f));
        for (j, &row) in set.iter().enumerate() {
            let a = p.g_mat.row(row);
            kkt.view_mut((n + j, 0), (1, n)).copy_from(&a);
            kkt.view_mut((0, n + j), (n, 1)).copy_from(&a.transpose());
            rhs[n + j] = p.g[row];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let z = sol.rows(0, n).into_owned();
        let lambda = sol.rows(n, k);
        let scale = 1.0 + p.g.amax();
        if lambda.iter().any(|l| *l < -tol * (1.0 + p.f.amax())) {
            continue;
        }
        if rows > 0 && (&p.g_mat * &z - &p.g).max() > tol * scale {
            continue;
        }
        let objective = p.objective(&z);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(EnumeratedQp { z, objective });
        }
    }
    best
}

/// Random strictly convex QP with `n <= 5` variables and up to six rows that
/// share a feasible point.
pub fn random_qp(r: &mut ChaCha8Rng) -> QpProblem {
    let n = r.random_range(1..=5);
    let rows = r.random_range(0..=6);
    let l = random_matrix(r, n, n, 1.0);
    let h = &l * l.transpose() + DMatrix::identity(n, n) * r.random_range(0.1..1.0);
    let h = (&h + h.transpose()) * 0.5;
    let f = random_vector(r, n, 3.0);
    let g_mat = random_matrix(r, rows, n, 1.0);
    let z0 = random_vector(r, n, 1.0);
    let g = &g_mat * &z0 + DVector::from_fn(rows, |_, _| r.random_range(0.0..1.0));
    QpProblem { h, f, g_mat, g, soft_rows: Vec::new(), slack_weight: 1e6 }
}

/// Largest solution discrepancy between the solver and enumeration.
pub fn qp_oracle(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let p = random_qp(&mut r);
        let s = solve(&p, &QpSettings::default()).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        let e = enumerate_qp(&p).expect("feasible by construction");
        worst = worst.max((&s.z - &e.z).amax() / e.z.amax().max(1.0));
    }
    worst
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join("case1_seed7_3s.csv")
}

/// Case 1 for three seconds with seed 7, the run behind the golden file.
pub fn golden_scenario() -> pwa_rendezvous::sim::Scenario {
    pwa_rendezvous::sim::Scenario { duration: 3.0, seed: 7, ..pwa_rendezvous::sim::Scenario::case1() }
}

pub fn golden_csv() -> Vec<u8> {
    let log = pwa_rendezvous::sim::run_closed_loop(&golden_scenario()).unwrap();
    let mut buf = Vec::new();
    pwa_rendezvous::output::write_csv(&log, &mut buf).unwrap();
    buf
}
