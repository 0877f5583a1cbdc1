mod common;

use common::*;
use pwa_rendezvous::output::write_json;
use pwa_rendezvous::sim::{run_closed_loop, Mode, Scenario};

/// Regenerate with `UPDATE_GOLDEN=1 cargo test --test determinism`.
#[test]
fn golden_csv_is_reproduced() {
    let csv = golden_csv();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &csv).unwrap();
    }
    let golden = std::fs::read(golden_path()).expect("golden file present");
    assert!(golden == csv, "trajectory differs from {}", golden_path().display());
}

#[test]
fn replays_serialise_identically() {
    for mode in [Mode::Sampling, Mode::Standard] {
        let s = Scenario { duration: 2.0, seed: 3, mode, ..Scenario::case2() };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_json(&run_closed_loop(&s).unwrap(), &mut a).unwrap();
        write_json(&run_closed_loop(&s).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn seeds_change_sampling_runs_only() {
    let base = Scenario { duration: 2.0, ..Scenario::case1() };
    let run = |mode, seed| run_closed_loop(&Scenario { mode, seed, ..base.clone() }).unwrap().records;
    assert_ne!(run(Mode::Sampling, 1), run(Mode::Sampling, 2));
    assert_eq!(run(Mode::Standard, 1), run(Mode::Standard, 2));
}
