//! Torque-free and wheel-driven rotation with 3-2-1 Euler angles.
//!
//! ```bash
//! cargo run --example attitude_dynamics
//! ```

use nalgebra::{Vector3, Vector6};
use pwa_rendezvous::attitude::{attitude_rate, InertiaParams};
use pwa_rendezvous::integrator::rk4_step;

fn main() -> pwa_rendezvous::Result<()> {
    let inertia = InertiaParams { j: [50.0, 35.0, 40.0], jw: [5.0; 3] };
    let dt = 0.1;
    for (label, u) in [("coasting", Vector3::zeros()), ("yaw wheel at 0.02", Vector3::new(0.0, 0.0, 0.02))] {
        let mut x = Vector6::new(0.0, 0.0, 0.0, 0.01, 0.02, 0.0);
        for _ in 0..300 {
            x = rk4_step(|xs, us| attitude_rate(xs, us, &inertia), &x, &u, dt)?;
        }
        let h = Vector3::new(inertia.j[0] * x[3], inertia.j[1] * x[4], inertia.j[2] * x[5]);
        println!(
            "{label:>16}: angles ({:7.2}, {:7.2}, {:7.2}) deg, rates ({:.4}, {:.4}, {:.4}) rad/s, |h| {:.4}",
            x[0].to_degrees(),
            x[1].to_degrees(),
            x[2].to_degrees(),
            x[3],
            x[4],
            x[5],
            h.norm()
        );
    }
    Ok(())
}
