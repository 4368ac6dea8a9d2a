//! Command-line experiment harness. Each subcommand runs one family of
//! reference studies; `configs/` in the repository root holds one canned
//! config per table. Exit codes: 0 success, 2 solver non-convergence,
//! 3 invalid configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stokes_hdg_mg::harness::{self, ExperimentConfig};
use stokes_hdg_mg::Error;

#[derive(Parser)]
#[command(
    name = "stokes-mg",
    about = "HDG Stokes solver with homogeneous geometric multigrid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file (flat `key = value` lines); flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Polynomial degree(s), comma separated.
    #[arg(long, global = true)]
    p: Option<String>,

    /// Maximum mesh level.
    #[arg(long, global = true)]
    levels: Option<usize>,

    /// Pseudo-time step(s), comma separated.
    #[arg(long, global = true)]
    dt: Option<String>,

    /// Smoother: jacobi | gs | gs-backward | sgs.
    #[arg(long, global = true)]
    smoother: Option<String>,

    /// Smoothing steps per half-cycle, comma separated.
    #[arg(long, global = true)]
    steps: Option<String>,

    /// Stabilization parameter tau* for the single-face method.
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Discretization: sfh | rth | bdmh.
    #[arg(long, global = true)]
    method: Option<String>,

    /// Seed each level's initial pressure from the converged coarser level.
    #[arg(long, global = true)]
    nested: bool,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence orders of p, u, and the velocity gradient.
    Eoc,
    /// Outer and inner iteration counts per level and time step.
    Iters,
    /// Condition-number estimates and their level-to-level growth.
    Cond,
    /// Identity of the condensed matrices across discretizations.
    Identity {
        /// Also check that off-star stabilization breaks the identity.
        #[arg(long)]
        negative_control: bool,
    },
    /// One full solve at a single level, reported as JSON.
    Solve {
        /// Mesh level (defaults to the desk-scale cap for the degree).
        #[arg(long)]
        level: Option<usize>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &cli.p {
        cfg.apply_kv("p", v)?;
    }
    if let Some(v) = cli.levels {
        cfg.apply_kv("levels", &v.to_string())?;
    }
    if let Some(v) = &cli.dt {
        cfg.apply_kv("dt", v)?;
    }
    if let Some(v) = &cli.smoother {
        cfg.apply_kv("smoother", v)?;
    }
    if let Some(v) = &cli.steps {
        cfg.apply_kv("steps", v)?;
    }
    if let Some(v) = cli.tau {
        cfg.apply_kv("tau", &v.to_string())?;
    }
    if let Some(v) = &cli.method {
        cfg.apply_kv("method", v)?;
    }
    if cli.nested {
        cfg.apply_kv("init", "nested")?;
    }
    if let Some(dir) = &cli.out {
        cfg.out_dir = Some(dir.clone());
    }
    if cli.verbose {
        cfg.verbose = true;
    }
    if let Command::Identity { negative_control } = &cli.command {
        cfg.negative_control |= *negative_control;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::InvalidConfig(_)
        | Error::Io(_)
        | Error::UnsupportedDegree(_)
        | Error::UnsupportedExactness(_) => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let outcome = match &cli.command {
        Command::Eoc => harness::cmd_eoc(&cfg),
        Command::Iters => harness::cmd_iters(&cfg),
        Command::Cond => harness::cmd_cond(&cfg),
        Command::Identity { .. } => harness::cmd_identity(&cfg),
        Command::Solve { level } => match harness::cmd_solve(&cfg, *level) {
            Ok((_, outcome)) => Ok(outcome),
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(out) if out.failures.is_empty() => ExitCode::SUCCESS,
        Ok(out) => {
            for f in &out.failures {
                eprintln!("failure: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
