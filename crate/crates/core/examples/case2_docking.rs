//! Closed-loop approach to a target whose body rates vary sinusoidally. Prints
//! the error history every 25 s.
//!
//! ```bash
//! cargo run --release --example case2_docking
//! ```

use pwa_rendezvous::sim::{metrics, run_closed_loop, Scenario, CHANNELS};

fn main() -> pwa_rendezvous::Result<()> {
    let s = Scenario::case2();
    let log = run_closed_loop(&s)?;
    print!("{:>6}", "t");
    for c in CHANNELS {
        print!(" {c:>10}");
    }
    println!();
    for r in log.records.iter().step_by(250) {
        let e = r.errors();
        print!("{:>6.0} {:>10.4}", r.t, e[0]);
        for v in &e[1..] {
            print!(" {:>10.4}", v.to_degrees());
        }
        println!();
    }
    let m = metrics(&log, &s.thresholds);
    println!("LVLH rms over the last 100 s: {:.3e} m", m.lvlh_rms);
    Ok(())
}
