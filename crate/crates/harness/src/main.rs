use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use risloc_harness::{run, Experiment, ExperimentConfig, HarnessError, Scale};

#[derive(Parser, Debug)]
#[command(name = "risloc", version, about = "Position error bounds for RIS-assisted near-field localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON file merged over the preset for the chosen scale.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// PEB over a plane of UE positions with a random RIS profile.
    PebMap,
    /// EFI of distance and angles against the RIS-UE distance.
    EfiSweep,
    /// Spatial gain versus power gain over random profiles.
    GainCompare,
    /// PEB and SNR around a focusing profile.
    FocusEval,
    /// Structural checks on random scenarios.
    PropSuite,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Self::PebMap => Experiment::PebMap,
            Self::EfiSweep => Experiment::EfiSweep,
            Self::GainCompare => Experiment::GainCompare,
            Self::FocusEval => Experiment::FocusEval,
            Self::PropSuite => Experiment::PropSuite,
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let overrides = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let mut cfg = ExperimentConfig::resolve(cli.command.experiment(), cli.scale, overrides)?;
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), HarnessError> {
    let cfg = resolve(&cli)?;
    if cli.dry_run {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.max(1));
    }
    let files = pool.build()?.install(|| run(&cfg))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
