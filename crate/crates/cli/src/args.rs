//! Command-line interface definition.

use crate::configfile;
use crate::errors::{CliError, CliResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use salientcut_core::{SegConfig, Strategy};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "salientcut",
    version,
    about = "Automatic salient-object extraction from video frame sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic test clip with ground truth.
    Gen(GenArgs),
    /// Dump per-frame saliency (or focus-density) heatmaps.
    Saliency(SaliencyArgs),
    /// Segment a frame sequence into object masks.
    Segment(SegmentArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Measure per-stage execution time.
    Bench(BenchArgs),
}

/// Configuration options shared by the processing commands.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Configuration file (key=value lines).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set sigma1=0.05.
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pairwise strength (overrides the config file).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Worker threads (default: SALIENTCUT_THREADS or all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ConfigArgs {
    /// Materialize the effective configuration: file, then --set, then
    /// dedicated flags.
    pub fn resolve(&self) -> CliResult<SegConfig> {
        let mut cfg = match &self.config {
            Some(path) => configfile::load_config(path)?,
            None => SegConfig::default(),
        };
        configfile::apply_overrides(&mut cfg, &self.set)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(lambda) = self.lambda {
            cfg.lambda = lambda;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var("SALIENTCUT_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .filter(|&n| n > 0)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Output directory (frames/ and truth/ are created inside).
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 352)]
    pub width: usize,
    #[arg(long, default_value_t = 288)]
    pub height: usize,
    #[arg(long, default_value_t = 60)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First frame of an induced occlusion of the object.
    #[arg(long, value_name = "FRAME")]
    pub occlude_start: Option<usize>,
    /// Occlusion length in frames.
    #[arg(long, value_name = "N", default_value_t = 5)]
    pub occlude_len: usize,
}

#[derive(Args, Debug)]
pub struct SaliencyArgs {
    /// Input frame directory.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory for heatmap PNGs.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
    /// Dump the eye-focus density instead of the raw saliency map.
    #[arg(long)]
    pub efdm: bool,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyArg {
    Manual,
    NonUpdate,
    Update,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Manual => Strategy::Manual,
            StrategyArg::NonUpdate => Strategy::NonUpdate,
            StrategyArg::Update => Strategy::Update,
        }
    }
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    /// Input frame directory.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory for masks and the run manifest.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
    /// Prior construction strategy.
    #[arg(long, value_enum, default_value = "update")]
    pub strategy: StrategyArg,
    /// Seed file (`x y label` lines) for the manual strategy, frame 0 only.
    #[arg(long, value_name = "FILE")]
    pub seeds: Option<PathBuf>,
    /// Also write overlay PNGs under overlay/.
    #[arg(long)]
    pub overlay: bool,
    /// Dump frame 0's flow graph in DIMACS max-flow format.
    #[arg(long, value_name = "FILE")]
    pub dump_graph: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory of predicted masks.
    #[arg(long, value_name = "DIR")]
    pub predicted: PathBuf,
    /// Directory of ground-truth masks.
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,
    /// Write the metrics report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Write per-frame metrics as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Input frame directory (repeatable: one report per input).
    #[arg(long, value_name = "DIR", required = true)]
    pub input: Vec<PathBuf>,
    /// Frames processed before measurement starts.
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    /// Maximum measured frames (default: the rest of the clip).
    #[arg(long, value_name = "N")]
    pub frames: Option<usize>,
    /// Write the report(s) as a JSON array.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}
