//! Command-line front end for running mapping experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ipp_core::experiment::{run_experiment, ExperimentConfig, EXAMPLE_CONFIG};
use ipp_core::field::{generate_binary_field, generate_gaussian_field, generate_split_field};
use ipp_core::grid::GridGeometry;

#[derive(Parser)]
#[command(name = "ipp", about = "Informative path planning experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all (planner, trial) pairs declared in a config file.
    Run {
        /// Path to the TOML experiment config.
        config: PathBuf,
        /// Output directory for CSVs and the manifest.
        #[arg(short, long, default_value = "results")]
        output: PathBuf,
        /// Override the base seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker pool size; this build runs trials sequentially and
        /// accepts the flag for interface stability.
        #[arg(short, long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print a template config to stdout.
    Init,
    /// Generate a ground-truth field CSV for inspection.
    Field {
        /// gaussian, split or binary.
        #[arg(long, default_value = "gaussian")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "30.0,30.0")]
        extent: Vec<f64>,
        #[arg(long, default_value_t = 0.75)]
        resolution: f64,
        /// Split threshold (%) or binary occupied fraction.
        #[arg(long, default_value_t = 40.0)]
        level: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn run() -> ipp_core::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            output,
            seed,
            trials,
            jobs,
        } => {
            if jobs > 1 {
                eprintln!("note: --jobs {jobs} requested; running sequentially");
            }
            let text = std::fs::read_to_string(&config)?;
            let mut parsed = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                parsed.seed = s;
            }
            if let Some(t) = trials {
                parsed.trials = t;
            }
            // hash and rerun against the effective config, overrides included
            let effective = toml::to_string(&parsed)
                .map_err(|e| ipp_core::IppError::Config(e.to_string()))?;
            let results = run_experiment(&effective, &output)?;
            println!(
                "wrote {} runs to {} (aggregate.csv, manifest.json)",
                results.len(),
                output.display()
            );
            Ok(())
        }
        Command::Init => {
            print!("{EXAMPLE_CONFIG}");
            Ok(())
        }
        Command::Field {
            kind,
            seed,
            extent,
            resolution,
            level,
            output,
        } => {
            if extent.len() != 2 {
                return Err(ipp_core::IppError::InvalidArgument(
                    "--extent needs two comma-separated values".into(),
                ));
            }
            let geometry = GridGeometry::new([0.0, 0.0], [extent[0], extent[1]], resolution)?;
            let field = match kind.as_str() {
                "gaussian" => generate_gaussian_field(geometry, [1.0, 3.0], [0.0, 100.0], seed)?,
                "split" => generate_split_field(geometry, level, seed)?,
                "binary" => generate_binary_field(geometry, level, seed)?,
                other => {
                    return Err(ipp_core::IppError::InvalidArgument(format!(
                        "unknown field kind {other:?}"
                    )))
                }
            };
            let file = std::fs::File::create(&output)?;
            field.to_csv(std::io::BufWriter::new(file))?;
            println!("wrote {}", output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
