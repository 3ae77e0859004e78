use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fleet_anomaly::anomaly::IndexKind;
use fleet_anomaly::density::Grid;
use fleet_anomaly::ingest::CleanConfig;
use fleet_anomaly_cli::commands;
use fleet_anomaly_cli::config::{detect_preset, load_json, simulate_preset, DetectConfig};
use fleet_anomaly_cli::CliError;

#[derive(Parser)]
#[command(name = "fleet-anomaly", version, about = "Detect anomalous fleet behaviour from vessel positions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Mean,
    Kurtosis,
    Both,
}

impl KindArg {
    fn kinds(self) -> Vec<IndexKind> {
        match self {
            KindArg::Mean => vec![IndexKind::Mean],
            KindArg::Kurtosis => vec![IndexKind::Kurtosis],
            KindArg::Both => vec![IndexKind::Mean, IndexKind::Kurtosis],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and clean raw position reports.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cleaning config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Clean reports and interpolate them onto an hourly vessel × hour panel.
    Panel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic fleet panel.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// hotspot-baseline, hotspot-event or stationary-noise.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute lagged KS statistics, anomaly indices and flags.
    Detect {
        /// Panel file (.json or .csv).
        #[arg(long, required_unless_present = "manifest")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// iuu-2016, iuu-2018a, iuu-2018b or synthetic-event.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        lag_hours: Option<usize>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        threads: Option<usize>,
        /// Re-run from a manifest written by an earlier detect.
        #[arg(long, conflicts_with_all = ["input", "config", "preset", "lag_hours", "kind"])]
        manifest: Option<PathBuf>,
    },
    /// Write only the lag × hour KS heatmap.
    Heatmap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 72)]
        lag_hours: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Threshold an existing index series against null windows.
    Calibrate {
        /// Series CSV written by detect.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Kernel density of between-vessel distances for every hour.
    Density {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fixed bandwidth in km; Silverman's rule per hour when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = 1600.0)]
        max_km: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn clean_config(path: Option<PathBuf>) -> Result<CleanConfig, CliError> {
    path.map_or_else(|| Ok(CleanConfig::default()), |p| load_json(&p))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Clean { input, out, config } => {
            let outcome = commands::cmd_clean(&input, &clean_config(config)?, &out)?;
            let r = &outcome.report;
            log::info!(
                "kept {} of {} pings from {} vessels",
                r.surviving_pings,
                r.input_pings,
                r.surviving_vessels
            );
            for w in &r.warnings {
                log::warn!("{w}");
            }
        }
        Command::Panel { input, out, config } => {
            let panel = commands::cmd_panel(&input, &clean_config(config)?, &out)?;
            log::info!("panel {} vessels × {} hours", panel.n_vessels(), panel.n_hours());
        }
        Command::Simulate {
            out,
            preset,
            config,
            seed,
        } => {
            let mut cfg = match (preset, config) {
                (_, Some(path)) => load_json(&path)?,
                (preset, None) => {
                    simulate_preset(preset.as_deref().unwrap_or("hotspot-baseline"), seed.unwrap_or(0))?
                }
            };
            if let Some(seed) = seed {
                cfg.scenario.seed = seed;
            }
            commands::cmd_simulate(&cfg, &out)?;
        }
        Command::Detect {
            input,
            out,
            config,
            preset,
            lag_hours,
            kind,
            threads,
            manifest,
        } => {
            let outcome = if let Some(m) = manifest {
                commands::cmd_detect_from_manifest(&m, threads, &out)?
            } else {
                let mut cfg: DetectConfig = match (config, preset) {
                    (Some(path), _) => load_json(&path)?,
                    (None, Some(name)) => detect_preset(&name)?,
                    (None, None) => DetectConfig::default(),
                };
                if let Some(l) = lag_hours {
                    cfg.lag_hours = l;
                }
                if let Some(k) = kind {
                    cfg.kinds = k.kinds();
                }
                let input = input.expect("clap enforces --input without --manifest");
                commands::cmd_detect(&input, &cfg, threads, &out)?
            };
            for r in &outcome.results {
                log::info!(
                    "{}: {} flagged hours",
                    r.series.kind.name(),
                    r.series.flagged_hours().len()
                );
            }
        }
        Command::Heatmap {
            input,
            out,
            lag_hours,
            threads,
        } => {
            commands::cmd_heatmap(&input, lag_hours, threads, &out)?;
        }
        Command::Calibrate {
            input,
            out,
            config,
            kind,
        } => {
            let cfg: DetectConfig = load_json(&config)?;
            let kinds = kind.kinds();
            if kinds.len() != 1 {
                return Err(CliError::config("calibrate takes a single --kind"));
            }
            let (_, cal) = commands::cmd_calibrate(&input, kinds[0], &cfg, &out)?;
            log::info!("threshold {}", cal.threshold);
        }
        Command::Density {
            input,
            out,
            bandwidth,
            max_km,
            points,
            threads,
        } => {
            let grid = Grid::new(0.0, max_km, points)
                .map_err(|e| CliError::config(e.to_string()))?;
            commands::cmd_density(&input, grid, bandwidth, threads, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLEET_ANOMALY_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}
