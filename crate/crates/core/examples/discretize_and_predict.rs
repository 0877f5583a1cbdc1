//! Zero-order-hold discretisation of the linearised LOS model along a
//! horizon, stacked predictions and the condensed cost.
//!
//! ```bash
//! cargo run --example discretize_and_predict
//! ```

use nalgebra::{DMatrix, DVector};
use pwa_rendezvous::los::{los_jacobians, LosState};
use pwa_rendezvous::orbit::{propagate_orbit, OrbitParams, MU_EARTH};
use pwa_rendezvous::prediction::{build_operators, condense, cost_from_prediction, discretize};

fn main() -> pwa_rendezvous::Result<()> {
    let orbit = OrbitParams { a: 1.0e7, e: 0.3, f0: 0.0, mu: MU_EARTH };
    let x = LosState { rho: 20.0, eps: 0.2, beta: -0.1, rho_dot: -0.5, rho_epsdot: 0.0, rho_betadot: 0.0 };
    let (np, nc, ts) = (10, 5, 0.1);

    let mut orb = orbit.initial_state();
    let mut models = Vec::new();
    for _ in 0..np {
        let (a, b) = los_jacobians(&x, &orb)?;
        models.push(discretize(
            &DMatrix::from_column_slice(6, 6, a.as_slice()),
            &DMatrix::from_column_slice(6, 3, b.as_slice()),
            ts,
        )?);
        orb = propagate_orbit(&orbit, &orb, ts);
    }
    println!("Ad(0) =\n{:.5}", models[0].ad);

    let ops = build_operators(&models, nc)?;
    let x_k = DVector::from_column_slice(x.to_vector().as_slice());
    let pred = condense(&ops, &x_k, &DVector::zeros(3))?;
    let coast = pred.states(&DVector::zeros(3 * nc));
    let ranges: Vec<String> = coast.iter().step_by(6).map(|v| format!("{v:.3}")).collect();
    println!("coasting range over the horizon: {}", ranges.join(" "));

    let xd = DVector::from_fn(6 * np, |i, _| if i % 6 == 0 { 20.0 } else { 0.0 });
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&[1000.0, 3e4, 3e4, 50.0, 150.0, 150.0]));
    let p = DMatrix::identity(3, 3) * 100.0;
    let cost = cost_from_prediction(&pred, &xd, &q, &p)?;
    let du = cost.h.clone().cholesky().expect("positive definite").solve(&(-&cost.f));
    println!("unconstrained first move: {:.4?}", &du.as_slice()[..3]);
    println!("cost coasting {:.3}, optimal {:.3}", cost.c0, cost.eval(&du));
    Ok(())
}
