//! `sightline` — run the visibility toolkit from the command line:
//! simulate traffic scenes, run estimators over them (or over recorded
//! logs), score the results, sweep parameters, and render grids.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/config error, 3 internal
//! error.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod config;
mod render;
mod run;
mod sweep;

use config::{load_config, EstimatorName};

/// A failed command, carrying the process exit code it maps to.
#[derive(Clone, Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn data(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

pub fn internal(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

#[derive(Parser)]
#[command(name = "sightline", version, about = "Sensor visibility estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML); missing sections use defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Reseeds both the traffic and the detection noise.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a scene and write its ground truth, labels, and radar log.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one estimator and write its grids.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `run.estimator` from the config.
        #[arg(long)]
        estimator: Option<EstimatorName>,
    },
    /// Run one estimator and score it against the detection evidence.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `run.estimator` from the config.
        #[arg(long)]
        estimator: Option<EstimatorName>,
    },
    /// Evaluate several estimators on the same scene, side by side.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Repeat for each estimator to include.
        #[arg(long = "estimator", required = true)]
        estimators: Vec<EstimatorName>,
    },
    /// Evaluate the [sweep] parameter grid and report the best setting.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `sweep.budget` from the config.
        #[arg(long)]
        budget: Option<usize>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Draw a saved 2D grid snapshot as a PPM image.
    Render {
        /// Grid snapshot (.slvg) to draw.
        #[arg(long)]
        input: PathBuf,
        /// Output image path (binary PPM).
        #[arg(long)]
        out: PathBuf,
        /// Pixels per grid cell.
        #[arg(long, default_value_t = 4)]
        scale: usize,
        /// Label file whose object positions are drawn as crosses.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Measurement log whose returns are drawn as dots.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Overlay time in seconds; defaults to the latest time on file.
        #[arg(long)]
        at: Option<f64>,
        /// Run config supplying the sensor pose for polar measurements.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_common(common: &CommonArgs) -> Result<config::RunConfig, Failure> {
    let mut cfg = load_config(&common.config).map_err(data)?;
    cfg.override_seed(common.seed);
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Simulate { common } => {
            let cfg = load_common(&common)?;
            run::cmd_simulate(&cfg, &common.out)
        }
        Cmd::Estimate { common, estimator } => {
            let mut cfg = load_common(&common)?;
            if let Some(est) = estimator {
                cfg.run.estimator = est;
            }
            run::cmd_estimate(&cfg, &common.out)
        }
        Cmd::Evaluate { common, estimator } => {
            let mut cfg = load_common(&common)?;
            if let Some(est) = estimator {
                cfg.run.estimator = est;
            }
            run::cmd_evaluate(&cfg, &common.out)
        }
        Cmd::Compare { common, estimators } => {
            let cfg = load_common(&common)?;
            run::cmd_compare(&cfg, &common.out, &estimators)
        }
        Cmd::Sweep { common, budget, jobs } => {
            let text = std::fs::read_to_string(&common.config)
                .map_err(|e| data(format!("reading {}: {e}", common.config.display())))?;
            let mut cfg = config::parse_config(&text)
                .map_err(|e| data(format!("parsing {}: {e}", common.config.display())))?;
            cfg.override_seed(common.seed);
            sweep::cmd_sweep(&text, &cfg, &common.out, common.seed, budget, jobs)
        }
        Cmd::Render { input, out, scale, labels, measurements, at, config: cfg_path } => {
            let sensor = match cfg_path {
                Some(p) => load_config(&p).map_err(data)?.sensor.pose(),
                None => config::RunConfig::default().sensor.pose(),
            };
            render::cmd_render(&render::RenderArgs {
                input: &input,
                out: &out,
                scale,
                labels: labels.as_deref(),
                measurements: measurements.as_deref(),
                at,
                sensor,
            })
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive as "errors" but are successes.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(f) = dispatch(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
