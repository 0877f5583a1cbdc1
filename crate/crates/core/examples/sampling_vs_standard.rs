//! Runs the constant-rate case in both controller modes over several seeds
//! and tabulates overshoot and early tracking error.
//!
//! ```bash
//! cargo run --release --example sampling_vs_standard [seeds] [duration_s]
//! ```

use pwa_rendezvous::sim::{compare, run_pairs, Scenario, CHANNELS};

fn main() -> pwa_rendezvous::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(10, |s| s.parse().expect("seed count"));
    let duration: f64 = args.next().map_or(60.0, |s| s.parse().expect("duration"));
    let base = Scenario { duration, ..Scenario::case1() };
    let pairs = run_pairs(&base, &(0..seeds).collect::<Vec<_>>())?;
    let report = compare(&pairs, 20.0)?;
    println!("{:<6} {:>22} {:>22}", "", "overshoot (deg / m)", "mean |e| on [0, 20] s");
    for (c, name) in CHANNELS.iter().enumerate() {
        let unit = |v: f64| if c == 0 { v } else { v.to_degrees() };
        println!(
            "{name:<6} {:>10.4} {:>11.4} {:>10.4} {:>11.4}",
            unit(report.mean_sampling.overshoot[c]),
            unit(report.mean_standard.overshoot[c]),
            unit(report.mean_sampling.mean_abs_error[c]),
            unit(report.mean_standard.mean_abs_error[c])
        );
    }
    println!("(left column of each pair: sampling, right: standard)");
    Ok(())
}
