//! Command-line driver for the dispersive-PDE solver workbench.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
//! 4 checkpoint/data integrity error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hinlri_core::config::{Command as RunCommand, RunConfig};
use hinlri_core::pipeline::run_command;
use hinlri_core::CoreError;

#[derive(Parser)]
#[command(
    name = "hinlri",
    about = "Spectral workbench for 1D dispersive PDEs: classical and resonance-based \
             low-regularity integrators, a neural-corrected hybrid stepper, \
             solver-in-the-loop training, and defect diagnostics.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample rough initial data into a checkpoint container.
    GenerateData(CommonArgs),
    /// Integrate one trajectory and log its invariants.
    RunSolver(CommonArgs),
    /// Train the latent corrector (offline regression + solver-in-the-loop).
    Train(CommonArgs),
    /// τ-convergence study with envelope classification.
    Converge(CommonArgs),
    /// Error across grid sizes at fixed τ, with divergence detection.
    Refine(CommonArgs),
    /// Defect-verification diagnostics bundle.
    Diagnose(CommonArgs),
    /// Convolution scaling, per-step timing and cost accounting.
    Bench(CommonArgs),
    /// Mini-retrain a trained corrector on out-of-distribution profiles.
    Retrain(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration (flags below override its fields).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Equation kind: kdv | cnls | qnls.
    #[arg(long)]
    equation: Option<String>,

    /// Sobolev index of the rough initial data.
    #[arg(long)]
    gamma: Option<f64>,

    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Dyadic step-size range "A,B" meaning τ = 2^-A .. 2^-B.
    #[arg(long = "tau-range")]
    tau_range: Option<String>,

    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Checkpoint path (trained model input).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn parse_tau_range(text: &str) -> Result<Vec<f64>, CoreError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CoreError::Config(format!(
            "--tau-range expects \"A,B\" (dyadic exponents), got `{text}`"
        )));
    }
    let a: i32 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CoreError::Config(format!("bad tau-range exponent `{}`", parts[0])))?;
    let b: i32 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CoreError::Config(format!("bad tau-range exponent `{}`", parts[1])))?;
    let (lo, hi) = (a.min(b), a.max(b));
    Ok((lo..=hi).map(|p| (2f64).powi(-p)).collect())
}

fn build_config(command: RunCommand, args: &CommonArgs) -> Result<RunConfig, CoreError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut cfg = RunConfig::parse_file(path)?;
            cfg.command = command;
            cfg
        }
        None => {
            let equation = args.equation.clone().ok_or_else(|| {
                CoreError::Config("either --config or --equation is required".into())
            })?;
            RunConfig::minimal(command, &equation)
        }
    };
    if let Some(eq) = &args.equation {
        cfg.equation = eq.clone();
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(range) = &args.tau_range {
        cfg.tau_values = parse_tau_range(range)?;
    }
    if let Some(grid) = &args.grid {
        cfg.grid_sizes = grid.clone();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(ck) = &args.checkpoint {
        cfg.checkpoint = Some(ck.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Config(_) | CoreError::Argument(_) => 2,
        CoreError::Divergence { .. } | CoreError::NonFinite { .. } => 3,
        CoreError::Integrity(_) | CoreError::Version { .. } | CoreError::Io { .. } => 4,
        _ => 1,
    }
}

fn run(command: RunCommand, args: &CommonArgs) -> Result<(), CoreError> {
    let cfg = build_config(command, args)?;
    let started = Instant::now();
    let outcome = run_command(&cfg)?;
    println!("{outcome}");
    // timestamps live only in the sidecar log, keeping result files
    // byte-reproducible
    let log_path = std::path::Path::new(&cfg.out_dir).join("run.log");
    if let Ok(mut f) = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
    {
        let _ = writeln!(
            f,
            "{} finished in {:.1}s (unix {})",
            cfg.command.name(),
            started.elapsed().as_secs_f64(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::GenerateData(a) => (RunCommand::GenerateData, a),
        Cmd::RunSolver(a) => (RunCommand::RunSolver, a),
        Cmd::Train(a) => (RunCommand::Train, a),
        Cmd::Converge(a) => (RunCommand::Converge, a),
        Cmd::Refine(a) => (RunCommand::Refine, a),
        Cmd::Diagnose(a) => (RunCommand::Diagnose, a),
        Cmd::Bench(a) => (RunCommand::Bench, a),
        Cmd::Retrain(a) => (RunCommand::Retrain, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
