//! Open-loop relative translation in the line-of-sight frame.
//!
//! Drifts a chaser for ten minutes from a point 80 m off an eccentric target
//! orbit with no thrust, printing range, angles and the LVLH position.
//!
//! ```bash
//! cargo run --example los_dynamics
//! ```

use nalgebra::Vector3;
use pwa_rendezvous::integrator::rk4_step;
use pwa_rendezvous::los::{los_rate, los_rhs, los_to_lvlh, LosState, TranslationInput};
use pwa_rendezvous::orbit::{propagate_orbit, OrbitParams, MU_EARTH};

fn main() -> pwa_rendezvous::Result<()> {
    let orbit = OrbitParams { a: 1.0e7, e: 0.3, f0: 0.0, mu: MU_EARTH };
    let mut orb = orbit.initial_state();
    let x0 = LosState { rho: 80.0, eps: 25f64.to_radians(), beta: -10f64.to_radians(), rho_dot: 0.0, rho_epsdot: 0.0, rho_betadot: 0.0 };

    let d = los_rhs(&x0, &TranslationInput::default(), &orb)?;
    println!("initial accelerations (rho, eps, beta): {:.3e} {:.3e} {:.3e}", d.accels[0], d.accels[1], d.accels[2]);

    let dt = 0.1;
    let mut x = x0.to_vector();
    println!("{:>6} {:>10} {:>9} {:>9} {:>30}", "t", "rho", "eps", "beta", "LVLH (m)");
    for k in 0..=6000 {
        if k % 1000 == 0 {
            let s = LosState::from_vector(&x);
            let p = los_to_lvlh(&s);
            println!(
                "{:>6.0} {:>10.3} {:>9.3} {:>9.3}   [{:>8.2} {:>8.2} {:>8.2}]",
                k as f64 * dt,
                s.rho,
                s.eps.to_degrees(),
                s.beta.to_degrees(),
                p[0],
                p[1],
                p[2]
            );
        }
        x = rk4_step(|xs, us| los_rate(xs, us, &orb), &x, &Vector3::zeros(), dt)?;
        orb = propagate_orbit(&orbit, &orb, dt);
    }
    Ok(())
}
