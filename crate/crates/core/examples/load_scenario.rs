//! Parses a scenario file, applies an override and writes the run to disk in
//! both formats.
//!
//! ```bash
//! cargo run --release --example load_scenario -- crates/core/scenarios/case2.toml /tmp/case2
//! ```

use pwa_rendezvous::output::{emit, Format};
use pwa_rendezvous::scenario::{load_scenario, scenario_to_toml};
use pwa_rendezvous::sim::run_closed_loop;

fn main() -> pwa_rendezvous::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/case1.toml").to_string());
    let out = args.next().unwrap_or_else(|| "out/example".to_string());
    let mut s = load_scenario(&path)?;
    s.duration = s.duration.min(30.0);
    print!("{}", scenario_to_toml(&s));
    let log = run_closed_loop(&s)?;
    for p in emit(&log, &out, &[Format::Csv, Format::Json])? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
