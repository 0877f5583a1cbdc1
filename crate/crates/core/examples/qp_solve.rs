//! Dense QP with hard and soft rows.
//!
//! ```bash
//! cargo run --example qp_solve
//! ```

use nalgebra::{DMatrix, DVector};
use pwa_rendezvous::qp::{dump, solve, QpProblem, QpSettings};

fn main() -> pwa_rendezvous::Result<()> {
    // minimise (z1 - 2)^2 + (z2 - 1)^2 subject to z1 + z2 <= 2, z1 <= 1.5
    let mut p = QpProblem {
        h: DMatrix::identity(2, 2) * 2.0,
        f: DVector::from_row_slice(&[-4.0, -2.0]),
        g_mat: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]),
        g: DVector::from_row_slice(&[2.0, 1.5]),
        soft_rows: Vec::new(),
        slack_weight: 1e4,
    };
    let s = solve(&p, &QpSettings::default())?;
    println!("{:?}: z = {:.6?}, active {:?}, multipliers {:.4?}", s.status, s.z.as_slice(), s.active_set, s.multipliers.as_slice());
    println!("KKT residuals {:?}", s.kkt);

    // add z1 >= 3, which clashes with the first two rows; mark it soft
    p.g_mat = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, -1.0, 0.0]);
    p.g = DVector::from_row_slice(&[2.0, 1.5, -3.0]);
    println!("hard: {:?}", solve(&p, &QpSettings::default())?.status);
    p.soft_rows = vec![2];
    let s = solve(&p, &QpSettings::default())?;
    println!("soft: {:?}, z = {:.6?}, slack {:.6}", s.status, s.z.as_slice(), s.slacks[0]);
    print!("{}", dump(&p));
    Ok(())
}
