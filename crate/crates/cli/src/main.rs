use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use henon_skew::{run, CliError, ExperimentConfig, ExperimentKind, Overrides};

#[derive(Parser, Debug)]
#[command(name = "henon-skew", version, about = "Fibered and random Hénon-map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed (overrides `[experiment] seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in the config.
    Run(Common),
    Filtration(Common),
    GreenRaster(Common),
    JuliaRaster(Common),
    AvgGreen(Common),
    SliceMass(Common),
    Converge(Common),
    Theta(Common),
    Rigidity(Common),
    Entropy(Common),
    BasinRaster(Common),
    Constants(Common),
}

impl Command {
    fn split(self) -> (Option<ExperimentKind>, Common) {
        use ExperimentKind as K;
        match self {
            Command::Run(c) => (None, c),
            Command::Filtration(c) => (Some(K::Filtration), c),
            Command::GreenRaster(c) => (Some(K::GreenRaster), c),
            Command::JuliaRaster(c) => (Some(K::JuliaRaster), c),
            Command::AvgGreen(c) => (Some(K::AvgGreen), c),
            Command::SliceMass(c) => (Some(K::SliceMass), c),
            Command::Converge(c) => (Some(K::Converge), c),
            Command::Theta(c) => (Some(K::Theta), c),
            Command::Rigidity(c) => (Some(K::Rigidity), c),
            Command::Entropy(c) => (Some(K::Entropy), c),
            Command::BasinRaster(c) => (Some(K::BasinRaster), c),
            Command::Constants(c) => (Some(K::Constants), c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (kind, common) = Cli::parse().command.split();
    match try_main(kind, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn try_main(kind: Option<ExperimentKind>, common: Common) -> anyhow::Result<()> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let overrides = Overrides {
        kind,
        out: common.out,
        seed: common.seed,
    };
    let cfg = ExperimentConfig::from_text(&text, &overrides)?;
    let result = run(&cfg)?;
    for line in result.summary {
        println!("{line}");
    }
    Ok(())
}
