//! Flags and the optional TOML config layer.
//!
//! A `--config FILE` may set any shared training flag using its long name
//! (`epochs = 5`, `batch-size = 64`, `data-dir = "..."`); flags given on the
//! command line win over the file, and the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use gfnn_core::data::DATA_DIR_ENV;

#[derive(Debug, Parser)]
#[command(
    name = "gfnn",
    version,
    about = "Fixed general-filter CNN vs learned-filter CNN on MNIST"
)]
pub struct Cli {
    /// TOML file with default values for training flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export the 41-kernel bank as JSON or as a PGM tile grid.
    Kernels(KernelsArgs),
    /// Train one architecture and write its report and checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the validation or test split.
    Eval(EvalArgs),
    /// Train both architectures on the same budget and compare them.
    Bench(BenchArgs),
    /// Train both architectures over a list of batch sizes or train sizes.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelFormat {
    Json,
    Pgm,
}

#[derive(Debug, Args)]
pub struct KernelsArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: KernelFormat,
    /// Output file; JSON goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pixels per kernel coefficient in the PGM.
    #[arg(long, default_value_t = 8)]
    pub cell: usize,
    /// Pixels between tiles in the PGM.
    #[arg(long, default_value_t = 4)]
    pub gutter: usize,
    /// Tiles per row in the PGM.
    #[arg(long, default_value_t = 8)]
    pub columns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchArg {
    Cnn,
    Gfnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    BatchSize,
    TrainSize,
}

/// Flags shared by every training subcommand. All optional so the config
/// file can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Shared {
    /// MNIST directory (IDX files, optionally .gz).
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    /// Use procedurally rendered digits instead of MNIST.
    #[arg(long)]
    #[serde(default)]
    pub synthetic: bool,
    /// Synthetic training-set size before any --train-size subsampling.
    #[arg(long)]
    pub synthetic_train: Option<usize>,
    /// Synthetic validation-set size.
    #[arg(long)]
    pub synthetic_val: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Train on a seeded subsample of this many training samples.
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
}

impl Shared {
    /// Fills unset fields from `file`.
    pub fn layered(mut self, file: &Shared) -> Shared {
        self.data_dir = self.data_dir.or_else(|| file.data_dir.clone());
        self.synthetic |= file.synthetic;
        self.synthetic_train = self.synthetic_train.or(file.synthetic_train);
        self.synthetic_val = self.synthetic_val.or(file.synthetic_val);
        self.epochs = self.epochs.or(file.epochs);
        self.batch_size = self.batch_size.or(file.batch_size);
        self.lr = self.lr.or(file.lr);
        self.dropout = self.dropout.or(file.dropout);
        self.train_size = self.train_size.or(file.train_size);
        self.seed = self.seed.or(file.seed);
        self.optimizer = self.optimizer.or(file.optimizer);
        self
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub arch: ArchArg,
    #[command(flatten)]
    pub shared: Shared,
    /// Precompute layer-1 features once (GFNN only).
    #[arg(long)]
    pub cache: bool,
    /// Feature cache location; a temporary file when omitted.
    #[arg(long)]
    pub cache_path: Option<PathBuf>,
    #[arg(long, default_value = "train_report.json")]
    pub out_report: PathBuf,
    #[arg(long, default_value = "model.gfnn")]
    pub out_checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "val")]
    pub split: SplitArg,
    #[command(flatten)]
    pub shared: Shared,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Train the GFNN arm without the feature cache.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, default_value = "bench.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Comma-separated axis values, e.g. 500,1000,2000. Defaults to
    /// 32,64,128,256 for batch size and 500,1000,2000 for train size.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<usize>,
    #[command(flatten)]
    pub shared: Shared,
    /// Train GFNN cells without the feature cache.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

pub fn read_config_file(path: &Path) -> Result<Shared, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("invalid config file {}: {e}", path.display()))
}
