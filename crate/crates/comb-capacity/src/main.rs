//! Command-line entry point for the capacity-bound experiment driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use comb_capacity::config::ExperimentConfig;
use comb_capacity::presets::{preset_by_name, PRESET_NAMES};
use comb_capacity::runner::{run_experiment, write_outputs};

#[derive(Parser)]
#[command(
    name = "comb-capacity",
    about = "Capacity bounds and QAM rates for the two-source Wiener phase-noise (EO comb) channel",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep from a JSON config file or a named preset.
    Run {
        /// path to a JSON experiment config
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// name of a bundled preset (see `comb-capacity presets`)
        #[arg(long)]
        preset: Option<String>,
        /// output directory for results.csv, curves/, manifest.json
        #[arg(long)]
        out: PathBuf,
        /// override the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// compute only these curves (comma-separated, e.g. U,L,C_awgn,AIR:64)
        #[arg(long, value_delimiter = ',')]
        curves: Option<Vec<String>>,
    },
    /// List the bundled presets, optionally writing their configs out.
    Presets {
        /// write each preset as <name>.json into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(
    config: Option<PathBuf>,
    preset: Option<String>,
) -> Result<ExperimentConfig, String> {
    match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| format!("invalid config: {e}"))
        }
        (None, Some(name)) => preset_by_name(&name).map_err(|e| e.to_string()),
        (None, None) => Err("pass --config <path> or --preset <name>".to_string()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            seed,
            curves,
        } => {
            let mut cfg = match load_config(config, preset) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(names) = curves {
                if let Err(e) = cfg.filter_curves(&names) {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            let output = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Err(e) = write_outputs(&output, &out) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            let failed = output.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "wrote {} rows to {} ({} failed)",
                output.rows.len(),
                out.display(),
                failed
            );
            // per-row failures are recorded in the CSV, not fatal
            ExitCode::SUCCESS
        }
        Command::Presets { out } => {
            for name in PRESET_NAMES {
                let cfg = preset_by_name(name).expect("bundled preset");
                let ch = match &cfg.channel {
                    comb_capacity::config::ChannelSpec::Linewidth { m, v_c, v_r } => {
                        format!("M={m}, v_c={v_c}, v_r={v_r}")
                    }
                    comb_capacity::config::ChannelSpec::Sigma {
                        m,
                        sigma2_c,
                        sigma2_r,
                    } => format!("M={m}, sigma2_c={sigma2_c}, sigma2_r={sigma2_r}"),
                };
                println!("{name}: {ch}, {} SNR points", cfg.snr_grid_db.len());
                if let Some(dir) = &out {
                    if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| {
                        std::fs::write(dir.join(format!("{name}.json")), cfg.to_json())
                    }) {
                        eprintln!("error writing preset {name}: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}
