//! `ppcharsum`: verifications and sweeps for short character sums at binary
//! quadratic forms modulo prime powers.
//!
//! Exit status: 0 when every assertion holds, 1 on a failed assertion or
//! evaluator error, 2 on invalid usage.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig, UsageError};
use ppcharsum::Exec;

#[derive(Debug, Parser)]
#[command(name = "ppcharsum", version, about = "p-adic verification suite for short character sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check χ(1 + pt) = e(a0 log_p(1 + pt) / p^n) for primitive characters.
    VerifyPostnikov {
        /// Characters per modulus when sampling.
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// Check every primitive character regardless of count.
        #[arg(long)]
        all: bool,
    },
    /// Critical-point multiplicity audit of the differenced phases.
    AuditMultiplicity {
        /// Full enumeration even for p > 7.
        #[arg(long)]
        exhaustive: bool,
    },
    /// |S_Q| against the main bounds on a grid of N (M = N); writes CSV.
    Sweep {
        #[arg(long, default_value_t = 3)]
        j1: i64,
        #[arg(long, default_value_t = 4)]
        j2: i64,
        /// Also write the JSON mirror here.
        #[arg(long)]
        json: Option<std::path::PathBuf>,
        /// Fill the seconds column (output is then not byte-stable).
        #[arg(long)]
        timing: bool,
    },
    /// Complete exponential sums against the critical-point bound.
    Expsum {
        /// Numerator coefficients, ascending degree (single-function mode).
        #[arg(long, allow_hyphen_values = true)]
        num: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        den: Option<String>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        max_m: u32,
    },
    /// ord_p(f') and the critical points mod p with multiplicities.
    Critpoints {
        #[arg(long, allow_hyphen_values = true)]
        num: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        den: Option<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Exact pipeline identities and the Poisson expansions.
    Identities {
        /// Random points per check above the exhaustive limit.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Taylor samples per residue β.
        #[arg(long, default_value_t = 4)]
        taylor_samples: usize,
        /// Number of seeded Poisson expansion instances (n drawn from 4..=8).
        #[arg(long, default_value_t = 10)]
        expansions: usize,
    },
    /// Exponents of the main bounds, comparison with the square-free bound,
    /// and optionally the Weyl shifts for a length X.
    Exponents {
        #[arg(long, default_value_t = 3)]
        j1: i64,
        #[arg(long, default_value_t = 4)]
        j2: i64,
        #[arg(long)]
        x: Option<f64>,
    },
}

fn write_out(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli, cfg: RunConfig) -> Result<bool> {
    let exec = if cfg.jobs == Some(1) { Exec::Sequential } else { Exec::Parallel };
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let report = match cli.command {
        Command::VerifyPostnikov { samples, all } => commands::verify_postnikov(&cfg, samples, all)?,
        Command::AuditMultiplicity { exhaustive } => commands::audit_multiplicity(&cfg, exhaustive, exec)?,
        Command::Sweep { j1, j2, json, timing } => {
            let out = commands::sweep(&cfg, j1, j2, timing, exec)?;
            write_out(&cfg, &out.csv)?;
            if let Some(path) = json {
                std::fs::write(&path, &out.json).with_context(|| format!("writing {}", path.display()))?;
            }
            let upper: Vec<_> = out.records.iter().filter(|r| r.branch == ppcharsum::bounds::Branch::OneShift).cloned().collect();
            let max_ratio = out.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
            eprintln!(
                "{} rows, max ratio {max_ratio:.3e}, one-shift slope {}",
                out.records.len(),
                ppcharsum::bounds::fit_slope(&upper).map_or("n/a".into(), |s| format!("{s:.3}"))
            );
            return Ok(true);
        }
        Command::Expsum { num, den, m, count, max_m } => {
            commands::expsum(&cfg, num.as_deref(), den.as_deref(), m, count, max_m, exec)?
        }
        Command::Critpoints { num, den, count } => commands::critpoints(&cfg, num.as_deref(), den.as_deref(), count)?,
        Command::Identities { samples, taylor_samples, expansions } => {
            commands::identities(&cfg, samples, taylor_samples, expansions, exec)?
        }
        Command::Exponents { j1, j2, x } => commands::exponents(&cfg, j1, j2, x)?,
    };
    write_out(&cfg, &report.body)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(cli, cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
