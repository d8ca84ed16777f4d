//! `fbe`: run one experiment and write its report.
//!
//! Exit codes: 0 when every asserted property holds, 2 when some fail, 1 on a runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fbe_core::cli::{run_experiment, Experiment, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "fbe", about = "Vacuum free-boundary Euler experiments")]
struct Args {
    /// Config file in the `key = value` format; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// One of run, converge, energy-audit, distance-audit, kernel-audit, interp-audit,
    /// linearized, rough-data.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Refine the base grid by `2^L`.
    #[arg(long)]
    grid_level: Option<u32>,
}

fn load(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(l) = args.grid_level {
        cfg.numerics.grid_level = l;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    // clap exits with 2 on bad arguments, which would read as a property failure.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fbe: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fbe: {} failed: {e}", cfg.experiment);
            return ExitCode::from(1);
        }
    };
    let dir = cfg.out_dir.join(cfg.experiment.name());
    if let Err(e) = report.write(&dir) {
        eprintln!("fbe: writing {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    for p in &report.properties {
        println!("{} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
    }
    println!("report written to {}", dir.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
