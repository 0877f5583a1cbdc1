use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pwa_rendezvous::output::{emit, emit_compare, Format};
use pwa_rendezvous::scenario::load_scenario;
use pwa_rendezvous::sim::{compare, metrics, run_pairs, Mode, Simulator, CHANNELS};
use pwa_rendezvous::{Error, Result};

/// Closed-loop rendezvous and docking with a tumbling target.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory, metrics and scenario files.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario duration (s).
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "csv,json", value_parser = parse_format)]
        format: Vec<Format>,
    },
    /// Run sampling and standard mode over seeds 0..N and tabulate the differences.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// End of the mean-error window (s).
        #[arg(long, default_value_t = 20.0)]
        window: f64,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "sampling" => Ok(Mode::Sampling),
        "standard" => Ok(Mode::Standard),
        _ => Err(format!("expected sampling or standard, got {s}")),
    }
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(
    scenario: PathBuf,
    mode: Option<Mode>,
    seed: Option<u64>,
    out: PathBuf,
    duration: Option<f64>,
    formats: Vec<Format>,
) -> Result<()> {
    let mut s = load_scenario(&scenario)?;
    if let Some(m) = mode {
        s.mode = m;
    }
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(d) = duration {
        s.duration = d;
    }
    s.validate()?;
    let mut sim = Simulator::new(&s)?;
    let outcome = sim.run();
    let log = sim.into_log();
    // keep whatever was simulated, also on abort
    for path in emit(&log, &out, &formats)? {
        log::info!("wrote {}", path.display());
    }
    outcome?;
    let m = metrics(&log, &s.thresholds);
    println!("{} steps, mode {}, seed {}", log.records.len(), s.mode.as_str(), s.seed);
    for c in &m.channels {
        match c.convergence_time {
            Some(t) => println!("  {:<6} converged at {t:.1} s, steady-state rms {:.3e}", c.name, c.steady_state_rms),
            None => println!("  {:<6} not converged", c.name),
        }
    }
    println!("  LVLH position rms {:.3e} m, resets {}, relaxed steps {}", m.lvlh_rms, m.reset_count, m.relaxed_steps);
    Ok(())
}

fn compare_cmd(scenario: PathBuf, seeds: u64, out: PathBuf, window: f64) -> Result<()> {
    let base = load_scenario(&scenario)?;
    if seeds == 0 {
        return Err(Error::Validation("--seeds must be at least 1".into()));
    }
    let seed_list: Vec<u64> = (0..seeds).collect();
    let pairs = run_pairs(&base, &seed_list)?;
    for (a, b) in &pairs {
        for log in [a, b] {
            let dir = out.join(format!("seed_{}", log.scenario.seed)).join(log.scenario.mode.as_str());
            emit(log, dir, &[Format::Csv])?;
        }
    }
    let report = compare(&pairs, window)?;
    emit_compare(&report, &out)?;
    println!("{:<6} {:>12} {:>12} {:>12} {:>12}", "", "overshoot", "", "mean |e|", "");
    println!("{:<6} {:>12} {:>12} {:>12} {:>12}", "", "sampling", "standard", "sampling", "standard");
    for (c, name) in CHANNELS.iter().enumerate() {
        println!(
            "{name:<6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            report.mean_sampling.overshoot[c],
            report.mean_standard.overshoot[c],
            report.mean_sampling.mean_abs_error[c],
            report.mean_standard.mean_abs_error[c]
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, mode, seed, out, duration, format } => run(scenario, mode, seed, out, duration, format),
        Command::Compare { scenario, seeds, out, window } => compare_cmd(scenario, seeds, out, window),
        Command::Validate { scenario } => load_scenario(&scenario).map(|s| {
            println!("{}: ok ({} steps of {} s)", scenario.display(), s.steps(), s.ts());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
