use std::path::PathBuf;
use std::process::ExitCode;

use aggregation_cli::{parse_config, run_experiment, Scenario};
use clap::Parser;

/// Runs a verification scenario for the nonlocal aggregation equation.
#[derive(Parser)]
#[command(version)]
struct Args {
    scenario: Scenario,
    /// JSON config; unspecified fields take the scenario defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut cfg = match parse_config(&args.config, Some(args.scenario)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    match run_experiment(&cfg) {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{} {} [{}] value={} {}",
                    c.status(),
                    c.name,
                    c.claim.tag(),
                    c.value,
                    c.threshold
                );
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
