//! Closed-loop approach to a target tumbling at constant rates.
//!
//! ```bash
//! cargo run --release --example case1_docking [duration_s]
//! ```

use pwa_rendezvous::sim::{metrics, run_closed_loop, Scenario};

fn main() -> pwa_rendezvous::Result<()> {
    let duration = std::env::args().nth(1).map_or(Ok(500.0), |s| s.parse()).expect("duration in seconds");
    let s = Scenario { duration, ..Scenario::case1() };
    let log = run_closed_loop(&s)?;
    let m = metrics(&log, &s.thresholds);
    for c in &m.channels {
        println!("{:<6} converged at {:?} s, overshoot {:.4}, steady rms {:.2e}", c.name, c.convergence_time, c.overshoot, c.steady_state_rms);
    }
    println!("LVLH rms {:.3e} m, {} resets, {} relaxed steps", m.lvlh_rms, m.reset_count, m.relaxed_steps);
    for (t, e) in log.wrap_events() {
        println!("reset at {t:.1} s on {} ({})", e.channel.as_str(), e.branch.as_str());
    }
    Ok(())
}
