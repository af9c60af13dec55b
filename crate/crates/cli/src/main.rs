//! Batch front-end for the harmonic toolkit.
//!
//! Each subcommand reads a JSON configuration (strictly validated), runs one
//! pipeline stage, writes its artifacts atomically, and prints a one-line
//! summary. Exit codes: 0 success, 2 validation error, 3 numerical error,
//! 4 I/O error. The `PHASOR_OUT_DIR` environment variable (or `--out-dir`)
//! redirects relative output paths.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasor_core::error::{Error, Result};

use commands::OutDir;

#[derive(Parser)]
#[command(
    name = "phasor",
    version,
    about = "Harmonic-domain modeling, solvers, controller synthesis and simulation for periodic systems"
)]
struct Cli {
    /// Directory for relative output paths (overrides PHASOR_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    signal_csv: Option<PathBuf>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    trajectory_json: Option<PathBuf>,
    /// causal | noncausal | twosided
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long)]
    seed_csv: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OutputOverrideArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    v_ref: Option<f64>,
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    equilibrium_json: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    controller_json: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    base: ConfigArg,
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sliding Fourier decomposition of a signal CSV into a trajectory JSON.
    Decompose(DecomposeArgs),
    /// Inverse decomposition of a trajectory JSON into a signal CSV.
    Reconstruct(ReconstructArgs),
    /// Harmonic Lyapunov equation for a periodic pair A(t), Q(t).
    Lyap(OutputOverrideArgs),
    /// Harmonic Riccati equation for A(t), B(t), Q(t), R(t).
    Riccati(OutputOverrideArgs),
    /// Harmonic Sylvester coupling equation for O(t), A(t), L(t)C(t).
    Sylvester(OutputOverrideArgs),
    /// Optimize the rectifier control phasors against the weighted objective.
    Equilibrium(EquilibriumArgs),
    /// Synthesize a feedback or forwarding controller at an equilibrium.
    Synthesize(SynthesizeArgs),
    /// Run time-domain scenarios under an exported controller.
    Simulate(SimulateArgs),
    /// Recompute steady-state metrics from a trace CSV.
    Report(ReportArgs),
}

fn out_dir(cli_flag: Option<PathBuf>) -> OutDir {
    OutDir(cli_flag.or_else(|| std::env::var_os("PHASOR_OUT_DIR").map(PathBuf::from)))
}

fn dispatch(cli: Cli) -> Result<Vec<String>> {
    let out = out_dir(cli.out_dir);
    match cli.command {
        Command::Decompose(args) => {
            let mut cfg: config::DecomposeConfig = config::load(&args.base.config)?;
            if let Some(v) = args.signal_csv {
                cfg.signal_csv = v;
            }
            if let Some(v) = args.period {
                cfg.period = v;
            }
            if let Some(v) = args.truncation {
                cfg.truncation = v;
            }
            if let Some(v) = args.samples_per_period {
                cfg.samples_per_period = v;
            }
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_decompose(&cfg, &out)?])
        }
        Command::Reconstruct(args) => {
            let mut cfg: config::ReconstructConfig = config::load(&args.base.config)?;
            if let Some(v) = args.trajectory_json {
                cfg.trajectory_json = v;
            }
            if let Some(v) = args.mode {
                cfg.mode = v;
            }
            if args.offset.is_some() {
                cfg.offset = args.offset;
            }
            if args.seed_csv.is_some() {
                cfg.seed_csv = args.seed_csv;
            }
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_reconstruct(&cfg, &out)?])
        }
        Command::Lyap(args) => {
            let mut cfg: config::LyapConfig = config::load(&args.base.config)?;
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_lyap(&cfg, &out)?])
        }
        Command::Riccati(args) => {
            let mut cfg: config::RiccatiConfig = config::load(&args.base.config)?;
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_riccati(&cfg, &out)?])
        }
        Command::Sylvester(args) => {
            let mut cfg: config::SylvesterConfig = config::load(&args.base.config)?;
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_sylvester(&cfg, &out)?])
        }
        Command::Equilibrium(args) => {
            let mut cfg: config::EquilibriumConfig = config::load(&args.base.config)?;
            if let Some(v) = args.v_ref {
                cfg.v_ref = v;
            }
            if let Some(v) = args.truncation {
                cfg.truncation = v;
            }
            if let Some(v) = args.samples_per_period {
                cfg.samples_per_period = v;
            }
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_equilibrium(&cfg, &out)?])
        }
        Command::Synthesize(args) => {
            let mut cfg: config::SynthesizeConfig = config::load(&args.base.config)?;
            if let Some(v) = args.equilibrium_json {
                cfg.equilibrium_json = v;
            }
            if let Some(v) = args.gamma {
                cfg.gamma = v;
            }
            if args.eta1.is_some() {
                cfg.eta1 = args.eta1;
            }
            if args.eta2.is_some() {
                cfg.eta2 = args.eta2;
            }
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_synthesize(&cfg, &out)?])
        }
        Command::Simulate(args) => {
            let mut cfg: config::SimulateConfig = config::load(&args.base.config)?;
            if let Some(v) = args.controller_json {
                cfg.controller_json = v;
            }
            commands::run_simulate(&cfg, &out)
        }
        Command::Report(args) => {
            let mut cfg: config::ReportConfig = config::load(&args.base.config)?;
            if let Some(v) = args.trace_csv {
                cfg.trace_csv = v;
            }
            if let Some(v) = args.output {
                cfg.output = v;
            }
            Ok(vec![commands::run_report(&cfg, &out)?])
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "category": err.category(), "message": err.message() }
            });
            eprintln!("{payload}");
            let code = match err {
                Error::Config(_) => 2,
                Error::Numerical(_) => 3,
                Error::Io(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}
