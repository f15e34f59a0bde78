use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use moran_limits::{convergence_study, run_experiment, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "moran-limits", version, about = "Moran process experiments and convergence studies")]
struct Cli {
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its snapshots and tables.
    Run(RunArgs),
    /// Run a convergence study (discrete-vs-pde, strong-selection, kimura-stationary).
    Study(RunArgs),
    /// Print the default config of an experiment.
    Config {
        #[arg(long)]
        experiment: Experiment,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Experiment,
    /// JSON config; the experiment's defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random game draws (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Finite-volume cells (overrides `cells`).
    #[arg(long)]
    cells: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default_for(self.experiment),
        };
        if cfg.experiment != self.experiment {
            bail!("config is for experiment {} but --experiment is {}", cfg.experiment, self.experiment);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(cells) = self.cells {
            cfg.cells = cells;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        cfg.validate()?;
        let out = cfg.output_dir.clone().context("no output directory: pass --out or set output_dir")?;
        Ok((cfg, out))
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (args, study) = match cli.command {
        Command::Config { experiment } => {
            println!("{}", ExperimentConfig::default_for(experiment).to_json());
            return Ok(());
        }
        Command::Run(args) => (args, false),
        Command::Study(args) => (args, true),
    };
    let (cfg, out) = args.resolve()?;
    let report = if study { convergence_study(&cfg)? } else { run_experiment(&cfg)? };
    let files = report.write(&out)?;
    log::info!("wrote {} files to {} in {:.2} s", files.len(), out.display(), report.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
