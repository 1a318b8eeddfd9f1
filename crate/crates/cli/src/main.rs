//! `drivseg`: synthesize fleets, run the segmentation pipeline, export plot data.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drivseg::config::RunConfig;
use drivseg::ingest::FleetSpec;
use drivseg::pipeline::{exit_code, run_pipeline, run_report, run_synth};
use drivseg::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "drivseg",
    version,
    about = "Driver segmentation from vehicle bus logs"
)]
struct Cli {
    /// Fleet spec for `synth`, run config for `pipeline`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the spec or config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (results directory for `report`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate session logs from a fleet spec.
    Synth,
    /// Run cross-validation, clustering, PCA and subsampling.
    Pipeline,
    /// Write plot-data CSVs from a results directory.
    Report {
        /// Results directory; defaults to `--out`.
        dir: Option<PathBuf>,
    },
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("{what} is required")))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Domain(e.to_string()))?;
    }
    match cli.command {
        Command::Synth => {
            let mut spec = FleetSpec::load(require(&cli.config, "--config <fleet spec>")?)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let manifest = run_synth(&spec, require(&cli.out, "--out")?)?;
            println!(
                "{} session files, {} users",
                manifest.session_files,
                manifest.users.len()
            );
        }
        Command::Pipeline => {
            let mut config = RunConfig::load(require(&cli.config, "--config <run config>")?)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(out) = cli.out {
                config.output_dir = out;
            }
            let summary = run_pipeline(&config)?;
            for c in &summary.cells {
                println!(
                    "{} {}: K = {} (M = {:.4}, S = {:.4})",
                    c.signal, c.feature, c.optimal_k, c.mean, c.std
                );
            }
        }
        Command::Report { dir } => {
            let dir = dir.or(cli.out);
            for path in run_report(require(&dir, "a results directory")?)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
