//! `semires` — config-driven experiment runner.
//!
//! Exit codes: 0 consistent/complete, 2 inconsistent verdict, 3 inconclusive,
//! 1 any error.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::ExperimentConfig;
use runner::Overrides;
use semires_core::scaling::Verdict;

#[derive(Parser)]
#[command(
    name = "semires",
    disable_help_subcommand = true,
    about = "Trapping classification and cutoff-resolvent scaling experiments"
)]
struct Cli {
    /// Experiment kind: classify | sweep | quasimode | glue | billiard |
    /// gevrey, or `validate` to check a config without running.
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides config; default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of log-spaced h points for sweeps.
    #[arg(long)]
    h_points: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("semires: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("semires: {e}");
            return ExitCode::from(1);
        }
    };

    if cli.kind == "validate" {
        let mut all = Vec::new();
        for kind in ["classify", "sweep", "quasimode", "glue", "billiard", "gevrey"] {
            let d = cfg.validate(kind);
            // a config is runnable if at least one kind accepts it
            if d.is_empty() {
                if !cli.quiet {
                    println!("ok: runnable as `{kind}`");
                }
                return ExitCode::SUCCESS;
            }
            all.push((kind, d));
        }
        for (kind, d) in all {
            for msg in d {
                eprintln!("{kind}: {msg}");
            }
        }
        return ExitCode::from(1);
    }

    let ov = Overrides {
        seed: cli.seed,
        h_points: cli.h_points,
    };
    let outcome = match runner::run(&cli.kind, &cfg, &ov) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("semires: {msg}");
            return ExitCode::from(1);
        }
    };
    let out_dir = cli
        .out
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    if let Err(e) = output::commit(&out_dir, &outcome.artifacts) {
        eprintln!("semires: writing artifacts to {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }
    if !cli.quiet {
        match outcome.verdict {
            Some(v) => println!(
                "{}: verdict {:?} (artifacts in {})",
                cli.kind,
                v,
                out_dir.display()
            ),
            None => println!("{}: complete (artifacts in {})", cli.kind, out_dir.display()),
        }
    }
    match outcome.verdict {
        None | Some(Verdict::Consistent) => ExitCode::SUCCESS,
        Some(Verdict::Inconsistent) => ExitCode::from(2),
        Some(Verdict::Inconclusive) => ExitCode::from(3),
    }
}
