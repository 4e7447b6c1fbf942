//! `resdyn`: batch driver for curvature, Hadamard coefficient, residue and
//! verification runs. Every command writes one JSON report (stdout or
//! `--out`) carrying a `schema_version` field.
//!
//! Exit codes: 0 all checks pass, 2 a tolerance check failed, 1 usage or
//! configuration error.

mod commands;
mod config;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::{cmd_curvature, cmd_hadamard, cmd_residue, envelope, NumericRoute};
use config::{FlagValues, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "resdyn", version, about = "Dynamical residues, Hadamard coefficients and spectral zeta residues")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML run configuration; its keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Zoo name (minkowski2, minkowski4, euclidean2, euclidean4, desitter4, sphere2, bump2) or metric file.
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Base point as comma-separated coordinates; repeatable.
    #[arg(long, global = true)]
    point: Vec<String>,
    /// Transport order N (≤ 3).
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Comma-separated integer orders α.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Spectral parameter such as 0+1i, or i0 for the iε → 0 limit; repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    z: Vec<String>,
    /// Comma-separated ε values for the i0 limit.
    #[arg(long, global = true)]
    eps_schedule: Option<String>,
    /// Exit with status 2 when a delta exceeds its tolerance.
    #[arg(long, global = true)]
    verify: bool,
    /// Relative tolerance for deltas.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// lorentzian or euclidean.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Total degree of the least-squares stencils in the transport solver.
    #[arg(long, global = true)]
    fit_degree: Option<usize>,
    /// Radial extent of the transport grid.
    #[arg(long, global = true)]
    radius: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Christoffel symbols, Riemann and Ricci tensors, scalar curvature.
    Curvature,
    /// Transport coefficients u_0..u_N on a normal-coordinate grid.
    Hadamard,
    /// Analytic and numeric dynamical residues with zeta residues.
    Residue {
        /// Numeric route from the resonance fit of Σ u_k F_k (n = 2 Lorentzian).
        #[arg(long)]
        scaling: bool,
    },
    /// Run a verification suite: stokes, vanishing, wodzicki, normalform, homogeneity.
    Verify { suite: String },
}

impl CommonArgs {
    fn flags(&self) -> FlagValues {
        FlagValues {
            config: self.config.clone(),
            metric: self.metric.clone(),
            points: self.point.clone(),
            order: self.order,
            alpha: self.alpha.clone(),
            z: self.z.clone(),
            eps_schedule: self.eps_schedule.clone(),
            tolerance: self.tolerance,
            out: self.out.clone(),
            mode: self.mode.clone(),
            seed: self.seed,
            verify: self.verify,
            fit_degree: self.fit_degree,
            radius: self.radius,
        }
    }
}

fn emit<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &cfg.out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

/// Ok(true) when every check passed.
fn run(cli: &Cli) -> Result<bool> {
    let cfg = RunConfig::from_flags(&cli.common.flags())?;
    let pass = match &cli.command {
        Command::Curvature => {
            let r = cmd_curvature(&cfg)?;
            emit(&cfg, &envelope("curvature", true, r))?;
            true
        }
        Command::Hadamard => {
            let r = cmd_hadamard(&cfg)?;
            let pass = r.pass();
            emit(&cfg, &envelope("hadamard", pass, r))?;
            pass
        }
        Command::Residue { scaling } => {
            let route = if *scaling { NumericRoute::Scaling } else { NumericRoute::Stokes };
            let r = cmd_residue(&cfg, route)?;
            let pass = r.pass();
            emit(&cfg, &envelope("residue", pass, r))?;
            pass
        }
        Command::Verify { suite } => {
            let r = verify::run_suite(suite, &cfg)?;
            let pass = r.pass;
            emit(&cfg, &envelope("verify", pass, r))?;
            return Ok(pass);
        }
    };
    Ok(pass || !cfg.verify)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
