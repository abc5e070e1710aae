use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tipping_core::config::{ExperimentConfig, RawConfig};
use tipping_core::experiments::{self, Fidelity};
use tipping_core::Error;

/// Simulate fast-slow stochastic normal forms and compute early-warning
/// statistics.
#[derive(Parser)]
#[command(name = "tipping", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single sample path.
    Simulate(ExpArgs),
    /// Ensemble variance and escaped fraction.
    Ensemble(ExpArgs),
    /// Stationary density slices.
    Density(ExpArgs),
    /// Stationary variance against y.
    VarianceCurve(ExpArgs),
    /// Fold exit points and fitted delay exponent.
    Delay(ExpArgs),
    /// Early-escape probability over an (eps, sigma) grid.
    ScalingScan(ExpArgs),
    /// Ensemble-averaged sliding variance and autocorrelation.
    Indicators(ExpArgs),
    /// Write the dataset behind a figure (or `all`).
    Figure {
        id: String,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Fewer paths and coarser grids.
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Models, defaults, configuration keys and figures.
    List,
}

/// Flags mirror configuration keys; `--set section.key=value` reaches any
/// key. Flags override the config file.
#[derive(Args)]
struct ExpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// model.kind
    #[arg(long)]
    model: Option<String>,
    /// model.epsilon
    #[arg(long)]
    epsilon: Option<String>,
    /// model.sigma
    #[arg(long)]
    sigma: Option<String>,
    /// sim.seed
    #[arg(long)]
    seed: Option<String>,
    /// sim.dt
    #[arg(long)]
    dt: Option<String>,
    /// sim.y0
    #[arg(long)]
    y0: Option<String>,
    /// sim.y_end
    #[arg(long)]
    y_end: Option<String>,
    /// sim.n_paths
    #[arg(long)]
    n_paths: Option<String>,
    /// output.dir
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(name: &str, args: &ExpArgs) -> tipping_core::Result<ExperimentConfig> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RawConfig::default(),
    };
    raw.set("experiment.name", name)?;
    let flags = [
        ("model.kind", &args.model),
        ("model.epsilon", &args.epsilon),
        ("model.sigma", &args.sigma),
        ("sim.seed", &args.seed),
        ("sim.dt", &args.dt),
        ("sim.y0", &args.y0),
        ("sim.y_end", &args.y_end),
        ("sim.n_paths", &args.n_paths),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, v)?;
        }
    }
    if let Some(out) = &args.out {
        raw.set("output.dir", &out.to_string_lossy())?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config {
                key: kv.clone(),
                message: "expected KEY=VALUE".into(),
            })?;
        raw.set(k.trim(), v.trim())?;
    }
    ExperimentConfig::from_raw(&raw)
}

fn run(cli: Cli) -> tipping_core::Result<()> {
    let (name, args) = match &cli.command {
        Command::List => {
            print!("{}", experiments::list_models_and_defaults());
            return Ok(());
        }
        Command::Figure { id, out, fast, seed } => {
            let fidelity = if *fast { Fidelity::Fast } else { Fidelity::Full };
            let ids = if id == "all" {
                experiments::figure_ids()
            } else {
                vec![experiments::find_figure(id)?.id]
            };
            for id in ids {
                let o = experiments::reproduce_figure(id, out, fidelity, *seed)?;
                println!("{id}: wrote {} files to {}", o.files.len(), o.dir.display());
            }
            return Ok(());
        }
        Command::Simulate(a) => ("simulate", a),
        Command::Ensemble(a) => ("ensemble", a),
        Command::Density(a) => ("density", a),
        Command::VarianceCurve(a) => ("variance-curve", a),
        Command::Delay(a) => ("delay", a),
        Command::ScalingScan(a) => ("scaling-scan", a),
        Command::Indicators(a) => ("indicators", a),
    };
    let cfg = build_config(name, args)?;
    let out = experiments::run_experiment(&cfg)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    println!("{}", out.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
