//! Command-line driver: argument parsing, dispatch, output files and exit codes.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors (including
//! unreadable or unwritable paths), 3 for numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kinetic_net::Error;

use config::{load_simulate, parse_list, AsymptoticConfig, BumpConfig, RunConfig, SweepConfig};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Config(m),
            Error::Numerical(m) => CliError::Numerical(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "kinetic-net",
    version,
    about = "Kinetic models on star networks: solvers, expansions and rate studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gauss-Hermite nodes, weights and orthonormality residual
    Quadrature {
        #[arg(long = "N", value_name = "N")]
        n_half: usize,
        /// Write CSV and manifest here instead of printing
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Structure identities, dissipativity and boundary-system conditioning
    Check {
        #[arg(long = "N", value_name = "N")]
        n_half: usize,
        /// Junction degree for the B2 rows
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kinetic solve on a half-line or a star network, configured by an INI file
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Composite asymptotic expansion and its layer profiles
    Asymptotic {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        eps: f64,
        /// Comma-separated snapshot times (default 0 and T)
        #[arg(long)]
        times: Option<String>,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        outer_spacing: f64,
        #[arg(long, default_value_t = 20.0)]
        z_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dz: f64,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Error of the expansion against fine kinetic solves over an ε sweep
    Converge {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Also run the full-network study and add per-edge errors
        #[arg(long)]
        network: bool,
        /// Skip the half-spacing run at the largest ε
        #[arg(long)]
        no_richardson: bool,
    },
    /// Residual norms of the expansion over an ε sweep
    Residual {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Time samples per residual norm
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Rerun the configuration recorded in a manifest
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct CaseArgs {
    /// q1-ibvp1 | q1-ibvp2 | q2-ibvp1 | q2-ibvp2
    #[arg(long)]
    case: String,
    #[arg(long = "N", value_name = "N", default_value_t = 3)]
    n_half: usize,
    #[arg(long, default_value_t = 3)]
    edges: usize,
    /// Expansion order K (case default if omitted)
    #[arg(long)]
    order: Option<usize>,
    #[arg(long = "T", value_name = "T", default_value_t = 1.0)]
    final_time: f64,
    /// Initial bump `center,width,a0,a1,..`; repeatable
    #[arg(long = "bump", value_name = "SPEC")]
    bumps: Vec<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CaseArgs,
    #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
    eps_list: String,
    #[arg(long, default_value_t = 16)]
    cells_per_eps: usize,
    #[arg(long, default_value_t = 0.9)]
    cfl: f64,
    #[arg(long, default_value = "upwind")]
    scheme: String,
    /// Emit a gnuplot script for a log-log figure
    #[arg(long)]
    plot: bool,
    #[arg(long, default_value = "out")]
    output: PathBuf,
}

fn bumps(specs: &[String]) -> Result<Vec<BumpConfig>, CliError> {
    Ok(specs
        .iter()
        .map(|s| BumpConfig::parse(s))
        .collect::<Result<_, _>>()?)
}

fn sweep_config(
    s: &SweepArgs,
    residual_times: usize,
    richardson: bool,
    network: bool,
) -> Result<SweepConfig, CliError> {
    Ok(SweepConfig {
        case: s.common.case.clone(),
        eps_list: parse_list(&s.eps_list)?,
        n_half: s.common.n_half,
        edges: s.common.edges,
        final_time: s.common.final_time,
        cells_per_eps: s.cells_per_eps,
        cfl: s.cfl,
        scheme: s.scheme.clone(),
        order: s.common.order,
        residual_times,
        richardson,
        network,
        plot: s.plot,
        initial: bumps(&s.common.bumps)?,
    })
}

/// Resolved config plus where to write (`None` prints the single table).
fn resolve(cmd: Command) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    Ok(match cmd {
        Command::Quadrature { n_half, output } => (RunConfig::Quadrature { n_half }, output),
        Command::Check {
            n_half,
            edges,
            output,
        } => (RunConfig::Check { n_half, edges }, output),
        Command::Simulate { config, output } => {
            (RunConfig::Simulate(load_simulate(&config)?), Some(output))
        }
        Command::Asymptotic {
            common,
            eps,
            times,
            outer_spacing,
            z_max,
            dz,
            output,
        } => {
            let snapshots = match times {
                Some(t) => parse_list(&t)?,
                None => vec![0.0, common.final_time],
            };
            let cfg = AsymptoticConfig {
                case: common.case,
                n_half: common.n_half,
                edges: common.edges,
                epsilon: eps,
                order: common.order,
                final_time: common.final_time,
                outer_spacing,
                z_max,
                dz,
                snapshots,
                initial: bumps(&common.bumps)?,
            };
            (RunConfig::Asymptotic(cfg), Some(output))
        }
        Command::Converge {
            sweep,
            network,
            no_richardson,
        } => {
            let cfg = sweep_config(&sweep, 16, !no_richardson, network)?;
            (RunConfig::Converge(cfg), Some(sweep.output))
        }
        Command::Residual { sweep, samples } => {
            let cfg = sweep_config(&sweep, samples, false, false)?;
            (RunConfig::Residual(cfg), Some(sweep.output))
        }
        Command::Replay { manifest, output } => (output::read_manifest(&manifest)?, Some(output)),
    })
}

/// Validates, runs and writes the outputs of one configuration.
pub fn execute(cfg: &RunConfig, dir: Option<&Path>) -> Result<(), CliError> {
    cfg.validate()?;
    let outputs = commands::execute(cfg)?;
    match dir {
        Some(d) => {
            let files = output::write_all(d, cfg, &outputs)?;
            eprintln!(
                "{}: wrote {} files to {}",
                cfg.name(),
                files.len(),
                d.display()
            );
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (_, content) in &outputs.files {
                stdout
                    .write_all(content.as_bytes())
                    .map_err(|e| CliError::Config(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match resolve(cli.command).and_then(|(cfg, dir)| execute(&cfg, dir.as_deref())) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
