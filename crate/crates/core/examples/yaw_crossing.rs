//! Target spinning in yaw so that the azimuth and yaw references cross
//! +-180 deg. Prints the state and reference around each reset.
//!
//! ```bash
//! cargo run --release --example yaw_crossing
//! ```

use pwa_rendezvous::sim::{run_closed_loop, Scenario};

fn main() -> pwa_rendezvous::Result<()> {
    let log = run_closed_loop(&Scenario::yaw_crossing())?;
    for (k, r) in log.records.iter().enumerate() {
        if r.wrap_events.is_empty() {
            continue;
        }
        for w in log.records[k.saturating_sub(2)..(k + 3).min(log.records.len())].iter() {
            println!(
                "t {:5.1}  beta {:9.3} ref {:9.3}   psi {:9.3} ref {:9.3}  {:?}",
                w.t,
                w.x_p[2].to_degrees(),
                w.x_dp[2].to_degrees(),
                w.x_a[2].to_degrees(),
                w.x_da[2].to_degrees(),
                w.wrap_events.iter().map(|e| format!("{}:{}", e.channel.as_str(), e.branch.as_str())).collect::<Vec<_>>()
            );
        }
        println!();
    }
    let peak = log.records.iter().flat_map(|r| r.u_a.iter().chain(&r.u_p)).fold(0.0f64, |a, v| a.max(v.abs()));
    println!("largest input magnitude {peak:.4}");
    Ok(())
}
