//! Subcommand implementations and the error-to-exit-code mapping.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gfnn_core::data::{
    load_mnist, load_train_split, synthetic_digits, Dataset, MnistPart, Split, DATA_DIR_ENV,
};
use gfnn_core::fsutil::write_atomic;
use gfnn_core::kernel_bank::{build_bank, render_bank, RenderOptions};
use gfnn_core::network::{load_checkpoint, save_checkpoint, Arch};
use gfnn_core::trainer::{
    bench_compare, default_epochs, evaluate, sweep, train_arch_with, EpochRecord, OptimizerKind,
    SweepAxis, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_DROPOUT, DEFAULT_LEARNING_RATE,
};
use gfnn_core::Error;

use crate::config::{
    read_config_file, ArchArg, AxisArg, BenchArgs, Cli, Command, EvalArgs, KernelFormat,
    KernelsArgs, OptimizerArg, Shared, SplitArg, SweepArgs, TrainArgs,
};

const SYNTHETIC_TRAIN: usize = 2000;
const SYNTHETIC_VAL: usize = 500;
const SYNTHETIC_SEED: u64 = 0;
const DEFAULT_BATCH_SWEEP: [usize; 4] = [32, 64, 128, 256];
const DEFAULT_SIZE_SWEEP: [usize; 3] = [500, 1000, 2000];
pub const EVAL_SCHEMA_VERSION: u32 = 1;

const DOWNLOAD_HINT: &str = "MNIST not found. Download train-images-idx3-ubyte.gz, train-labels-idx1-ubyte.gz, \
t10k-images-idx3-ubyte.gz and t10k-labels-idx1-ubyte.gz from http://yann.lecun.com/exdb/mnist/ \
(or a mirror such as https://ossci-datasets.s3.amazonaws.com/mnist/) into one directory and pass it with \
--data-dir or the GFNN_DATA_DIR environment variable. Use --synthetic to run without MNIST.";

#[derive(Debug)]
pub struct CliError {
    code: u8,
    msg: String,
    hint: Option<&'static str>,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            msg: msg.into(),
            hint: Some("run `gfnn --help` for usage"),
        }
    }

    fn output(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            msg: msg.into(),
            hint: None,
        }
    }

    fn missing_data(msg: impl Into<String>) -> Self {
        Self {
            code: 3,
            msg: msg.into(),
            hint: Some(DOWNLOAD_HINT),
        }
    }

    fn corrupt(msg: impl Into<String>) -> Self {
        Self {
            code: 4,
            msg: msg.into(),
            hint: None,
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn hint(&self) -> Option<&'static str> {
        self.hint
    }

    /// Errors raised while reading input data or artifacts.
    fn from_input(e: Error) -> Self {
        match e {
            Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                Self::missing_data(e.to_string())
            }
            Error::Io { .. } => Self::missing_data(e.to_string()),
            Error::Format { .. }
            | Error::Length { .. }
            | Error::Pairing { .. }
            | Error::Checkpoint(_)
            | Error::StaleCache { .. }
            | Error::Data(_) => Self::corrupt(e.to_string()),
            other => Self::from_run(other),
        }
    }

    /// Errors raised while training or writing outputs.
    fn from_run(e: Error) -> Self {
        match e {
            Error::Io { .. } => Self::output(e.to_string()),
            Error::Config(_) | Error::Parameter(_) => Self::usage(e.to_string()),
            Error::StaleCache { .. } | Error::Checkpoint(_) | Error::Format { .. } => {
                Self::corrupt(e.to_string())
            }
            other => Self {
                code: 1,
                msg: other.to_string(),
                hint: None,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn dispatch(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(p) => read_config_file(p).map_err(CliError::usage)?,
        None => Shared::default(),
    };
    match cli.command {
        Command::Kernels(a) => cmd_kernels(a),
        Command::Train(a) => cmd_train(a, &file),
        Command::Eval(a) => cmd_eval(a, &file),
        Command::Bench(a) => cmd_bench(a, &file),
        Command::Sweep(a) => cmd_sweep(a, &file),
    }
}

/// Fails early when an output's directory does not exist.
fn check_output(path: &Path) -> CliResult {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if !dir.is_dir() {
        return Err(CliError::output(format!(
            "cannot write {}: directory {} does not exist",
            path.display(),
            dir.display()
        )));
    }
    if path.is_dir() {
        return Err(CliError::output(format!(
            "cannot write {}: it is a directory",
            path.display()
        )));
    }
    Ok(())
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult {
    write_atomic(path, bytes).map_err(|e| CliError::output(e.to_string()))
}

fn arch_of(a: ArchArg) -> Arch {
    match a {
        ArchArg::Cnn => Arch::Cnn,
        ArchArg::Gfnn => Arch::Gfnn,
    }
}

fn cmd_kernels(a: KernelsArgs) -> CliResult {
    let bank = build_bank();
    match a.format {
        KernelFormat::Json => {
            let json = serde_json::to_string_pretty(&bank).expect("bank serializes") + "\n";
            match &a.out {
                Some(p) => {
                    check_output(p)?;
                    write_output(p, json.as_bytes())
                }
                None => {
                    print!("{json}");
                    Ok(())
                }
            }
        }
        KernelFormat::Pgm => {
            let Some(p) = &a.out else {
                return Err(CliError::usage("--format pgm needs --out"));
            };
            if a.cell == 0 || a.columns == 0 {
                return Err(CliError::usage("--cell and --columns must be at least 1"));
            }
            check_output(p)?;
            let opts = RenderOptions {
                cell: a.cell,
                gutter: a.gutter,
                columns: a.columns,
            };
            let img = render_bank(&bank, opts).map_err(CliError::from_run)?;
            write_output(p, &img.to_pgm())
        }
    }
}

/// Fully resolved data source.
enum Source {
    Mnist(PathBuf),
    Synthetic { train: usize, val: usize },
}

impl Source {
    fn from_shared(s: &Shared) -> CliResult<Self> {
        if s.synthetic {
            let train = s.synthetic_train.unwrap_or(SYNTHETIC_TRAIN);
            let val = s.synthetic_val.unwrap_or(SYNTHETIC_VAL);
            if train == 0 || val == 0 {
                return Err(CliError::usage(
                    "--synthetic-train and --synthetic-val must be at least 1",
                ));
            }
            return Ok(Source::Synthetic { train, val });
        }
        if s.synthetic_train.is_some() || s.synthetic_val.is_some() {
            return Err(CliError::usage(
                "--synthetic-train and --synthetic-val need --synthetic",
            ));
        }
        match &s.data_dir {
            Some(d) => Ok(Source::Mnist(d.clone())),
            None => Err(CliError::missing_data(format!(
                "no data directory given (use --data-dir or {DATA_DIR_ENV})"
            ))),
        }
    }

    /// Training-set size before subsampling, known without loading data.
    fn train_len(&self) -> usize {
        match self {
            Source::Mnist(_) => gfnn_core::data::TRAIN_SPLIT,
            Source::Synthetic { train, .. } => *train,
        }
    }

    /// Synthetic digits come from one stream: train, then validation, then
    /// a test block of the validation size.
    fn synthetic_pool(train: usize, val: usize) -> Dataset {
        synthetic_digits(train + 2 * val, SYNTHETIC_SEED)
    }

    fn split(&self) -> CliResult<Split> {
        match self {
            Source::Mnist(dir) => load_train_split(dir).map_err(CliError::from_input),
            Source::Synthetic { train, val } => {
                let pool = Self::synthetic_pool(*train, *val);
                let first: Vec<usize> = (0..train + val).collect();
                let d = pool
                    .select(pool.name.clone(), &first)
                    .map_err(CliError::from_run)?;
                Split::holdout(&d, *val).map_err(CliError::from_run)
            }
        }
    }

    fn test(&self) -> CliResult<Dataset> {
        match self {
            Source::Mnist(dir) => load_mnist(dir, MnistPart::Test).map_err(CliError::from_input),
            Source::Synthetic { train, val } => {
                let pool = Self::synthetic_pool(*train, *val);
                let tail: Vec<usize> = (train + val..pool.len()).collect();
                pool.select(format!("{}[test]", pool.name), &tail)
                    .map_err(CliError::from_run)
            }
        }
    }
}

fn train_config(s: &Shared, source: &Source) -> CliResult<TrainConfig> {
    let effective = s.train_size.unwrap_or(source.train_len());
    if let Some(n) = s.train_size {
        if n == 0 || n > source.train_len() {
            return Err(CliError::usage(format!(
                "--train-size must be in 1..={}, got {n}",
                source.train_len()
            )));
        }
    }
    let cfg = TrainConfig {
        epochs: s.epochs.unwrap_or(default_epochs(effective)),
        batch_size: s.batch_size.unwrap_or(DEFAULT_BATCH_SIZE),
        learning_rate: s.lr.unwrap_or(DEFAULT_LEARNING_RATE),
        dropout_rate: s.dropout.unwrap_or(DEFAULT_DROPOUT),
        seed: s.seed.unwrap_or(0),
        use_cache: false,
        cache_path: None,
        train_size: s.train_size,
        optimizer: match s.optimizer.unwrap_or(OptimizerArg::Adam) {
            OptimizerArg::Adam => OptimizerKind::adam(),
            OptimizerArg::Sgd => OptimizerKind::sgd(),
        },
    };
    cfg.validate().map_err(CliError::from_run)?;
    Ok(cfg)
}

fn print_epoch(label: &str, total: usize, r: &EpochRecord) {
    println!(
        "[{label}] epoch {}/{total} loss {:.4} val_acc {:.4} time {:.2}s",
        r.epoch, r.mean_loss, r.val_accuracy, r.wall_clock_seconds
    );
}

fn cmd_train(a: TrainArgs, file: &Shared) -> CliResult {
    let shared = a.shared.layered(file);
    let arch = arch_of(a.arch);
    if (a.cache || a.cache_path.is_some()) && arch == Arch::Cnn {
        return Err(CliError::usage("cache requires frozen first layer"));
    }
    let source = Source::from_shared(&shared)?;
    let mut cfg = train_config(&shared, &source)?;
    cfg.use_cache = a.cache || a.cache_path.is_some();
    cfg.cache_path = a.cache_path.clone();
    check_output(&a.out_report)?;
    check_output(&a.out_checkpoint)?;
    if let Some(p) = &a.cache_path {
        check_output(p)?;
    }

    let split = source.split()?;
    let bank = build_bank();
    let label = arch.to_string();
    let (net, report) = train_arch_with(arch, &split, &cfg, &bank, |r| {
        print_epoch(&label, cfg.epochs, r)
    })
    .map_err(CliError::from_run)?;
    save_checkpoint(&net, &a.out_checkpoint).map_err(|e| CliError::output(e.to_string()))?;
    write_output(&a.out_report, report.to_json().as_bytes())?;
    println!(
        "[{label}] final val_acc {:.4} total {:.2}s (cache {:.2}s)",
        report.final_val_accuracy, report.total_seconds, report.cache_seconds
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EvalReport {
    schema_version: u32,
    arch: Arch,
    split: &'static str,
    dataset: String,
    samples: usize,
    accuracy: f64,
}

fn cmd_eval(a: EvalArgs, file: &Shared) -> CliResult {
    let shared = a.shared.layered(file);
    let source = Source::from_shared(&shared)?;
    if let Some(p) = &a.out_json {
        check_output(p)?;
    }
    let net = load_checkpoint(&a.checkpoint).map_err(|e| match e {
        Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => CliError {
            code: 3,
            msg: e.to_string(),
            hint: None,
        },
        other => CliError::corrupt(other.to_string()),
    })?;
    let (split_name, data) = match a.split {
        SplitArg::Val => ("val", source.split()?.validation),
        SplitArg::Test => ("test", source.test()?),
    };
    let accuracy = evaluate(&net, &data).map_err(CliError::from_run)?;
    println!(
        "[{}] {split_name} accuracy {accuracy:.4} on {} samples",
        net.arch(),
        data.len()
    );
    if let Some(p) = &a.out_json {
        let r = EvalReport {
            schema_version: EVAL_SCHEMA_VERSION,
            arch: net.arch(),
            split: split_name,
            dataset: data.name.clone(),
            samples: data.len(),
            accuracy,
        };
        let json = serde_json::to_string_pretty(&r).expect("eval report serializes") + "\n";
        write_output(p, json.as_bytes())?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, file: &Shared) -> CliResult {
    let shared = a.shared.layered(file);
    let source = Source::from_shared(&shared)?;
    let cnn_cfg = train_config(&shared, &source)?;
    let gfnn_cfg = TrainConfig {
        use_cache: !a.no_cache,
        ..cnn_cfg.clone()
    };
    check_output(&a.out)?;
    let split = source.split()?;
    let report =
        bench_compare(&split, &cnn_cfg, &gfnn_cfg, &build_bank()).map_err(CliError::from_run)?;
    write_output(&a.out, report.to_json().as_bytes())?;
    println!(
        "timeRatio {:.3} endToEndRatio {:.3} accuracyDelta {:+.4} (cnn {:.4}, gfnn {:.4})",
        report.time_ratio,
        report.end_to_end_ratio,
        report.accuracy_delta,
        report.cnn().final_val_accuracy,
        report.gfnn().final_val_accuracy
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs, file: &Shared) -> CliResult {
    let shared = a.shared.layered(file);
    let source = Source::from_shared(&shared)?;
    let axis = match a.axis {
        AxisArg::BatchSize => SweepAxis::BatchSize,
        AxisArg::TrainSize => SweepAxis::TrainSize,
    };
    let values = if a.values.is_empty() {
        match axis {
            SweepAxis::BatchSize => DEFAULT_BATCH_SWEEP.to_vec(),
            SweepAxis::TrainSize => DEFAULT_SIZE_SWEEP.to_vec(),
        }
    } else {
        a.values.clone()
    };
    if values.contains(&0) {
        return Err(CliError::usage("--values must all be at least 1"));
    }
    if axis == SweepAxis::TrainSize {
        if let Some(&v) = values.iter().find(|&&v| v > source.train_len()) {
            return Err(CliError::usage(format!(
                "train size {v} exceeds the {} available samples",
                source.train_len()
            )));
        }
    }
    let mut base = train_config(&shared, &source)?;
    base.use_cache = !a.no_cache;
    check_output(&a.out)?;
    let split = source.split()?;
    let result = sweep(axis, &values, &base, &split, &build_bank(), |row| {
        let acc = row
            .accuracy
            .map_or("ERR".to_string(), |v| format!("{v:.4}"));
        let secs = row
            .total_seconds
            .map_or("ERR".to_string(), |v| format!("{v:.2}s"));
        println!(
            "[{axis} {}] {} accuracy {acc} total {secs}",
            row.axis_value, row.arch
        );
    })
    .map_err(CliError::from_run)?;
    for outcome in &result.outcomes {
        if let Err(e) = outcome {
            eprintln!("cell failed: {e}");
        }
    }
    write_output(&a.out, result.table.to_csv().as_bytes())
}
