//! Training loop with per-phase wall-clock timing, evaluation, and the
//! CNN-vs-GFNN comparison harness.

mod bench;
mod optimizer;
mod report;
mod sweep;

use std::time::Instant;

use crate::data::{normalize, subsample, Dataset, Split};
use crate::error::{Error, Result};
use crate::kernel_bank::KernelBank;
use crate::network::{argmax_rows, precompute_features, Arch, Network, NetworkConfig};
use crate::rng::SplitMix64;
use crate::tensor::{softmax_xent, Tensor};

pub use bench::{bench_compare, BenchReport};
pub use optimizer::{adam_update, optimizer_step, OptimizerKind, OptimizerState};
pub use report::{
    default_epochs, EpochRecord, PhaseSeconds, TrainConfig, TrainReport, DEFAULT_BATCH_SIZE,
    DEFAULT_DROPOUT, DEFAULT_LEARNING_RATE, REPORT_SCHEMA_VERSION,
};
pub use sweep::{sweep, SweepAxis, SweepResult, SweepRow, SweepTable, SWEEP_HEADER};

const SHUFFLE_STREAM: u64 = 100;
const DROPOUT_STREAM: u64 = 101;
const EVAL_BATCH: usize = 250;

/// Classification accuracy with dropout off.
pub fn evaluate(net: &Network<f32>, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Parameter(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    evaluate_tensor(net, &normalize(data)?, &data.labels_usize())
}

fn evaluate_tensor(net: &Network<f32>, images: &Tensor<f32>, labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    let mut rng = SplitMix64::new(0);
    let mut correct = 0usize;
    let mut start = 0;
    while start < n {
        let count = EVAL_BATCH.min(n - start);
        let batch = images.slice_batch(start, count)?;
        let (logits, _) = net.forward(&batch, false, &mut rng)?;
        correct += argmax_rows(&logits)
            .iter()
            .zip(&labels[start..start + count])
            .filter(|(p, l)| p == l)
            .count();
        start += count;
    }
    Ok(correct as f64 / n as f64)
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

enum Source {
    Images(Tensor<f32>),
    Cache(crate::network::FeatureCache),
}

/// Trains `net` in place on `split.train` (optionally subsampled), checking
/// `split.validation` after every epoch.
///
/// With `use_cache`, layer-1 features are computed once up front and every
/// step starts from them; the construction time is part of
/// `total_seconds`. Per-epoch shuffling and dropout masks come from
/// independent streams of `cfg.seed`, so cached and uncached runs see
/// identical batches and masks.
pub fn train(net: &mut Network<f32>, split: &Split, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(net, split, cfg, |_| {})
}

/// [`train`] with a callback after each epoch's record is complete.
pub fn train_with(
    net: &mut Network<f32>,
    split: &Split,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    cfg.validate()?;
    if cfg.use_cache && !net.is_frozen() {
        return Err(Error::Config("cache requires frozen first layer".into()));
    }
    net.set_dropout_rate(cfg.dropout_rate)?;

    let train_ds = match cfg.train_size {
        Some(n) if n > split.train.len() => {
            return Err(Error::Config(format!(
                "train size {n} exceeds the {} available samples",
                split.train.len()
            )));
        }
        Some(n) => subsample(&split.train, n, cfg.seed)?,
        None => split.train.clone(),
    };
    if split.validation.is_empty() {
        return Err(Error::Parameter("validation split is empty".into()));
    }
    let labels = train_ds.labels_usize();
    let val_x = normalize(&split.validation)?;
    let val_labels = split.validation.labels_usize();

    let mut cache_seconds = 0.0;
    let mut _cache_tmp = None;
    let source = if cfg.use_cache {
        let path = match &cfg.cache_path {
            Some(p) => p.clone(),
            None => {
                let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                let p = dir.path().join("features.gfnc");
                _cache_tmp = Some(dir);
                p
            }
        };
        let t = Instant::now();
        let cache = precompute_features(net, &train_ds, &path)?;
        cache_seconds = secs(t);
        Source::Cache(cache)
    } else {
        Source::Images(normalize(&train_ds)?)
    };

    let mut shuffle_rng = SplitMix64::derive(cfg.seed, SHUFFLE_STREAM);
    let mut dropout_rng = SplitMix64::derive(cfg.seed, DROPOUT_STREAM);
    let mut opt = OptimizerState::new(cfg.optimizer);
    let n = train_ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let epoch_start = Instant::now();
        let mut phases = PhaseSeconds::default();
        let mut loss_sum = 0.0f64;
        let mut steps = 0;
        shuffle_rng.shuffle(&mut order);

        for rows in order.chunks(cfg.batch_size) {
            let batch_labels: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();

            let (logits, trace) = match &source {
                Source::Images(x) => {
                    let t = Instant::now();
                    let batch = x.gather_batch(rows)?;
                    phases.data_load += secs(t);

                    let t = Instant::now();
                    let (features, l1) = net.layer1_forward(&batch)?;
                    phases.layer1_forward += secs(t);

                    let t = Instant::now();
                    let (logits, rest) = net.forward_rest(&features, true, &mut dropout_rng)?;
                    phases.rest += secs(t);
                    (logits, (Some(l1), rest))
                }
                Source::Cache(cache) => {
                    let t = Instant::now();
                    let batch = cache.read_batch(rows)?;
                    phases.data_load += secs(t);

                    let t = Instant::now();
                    let (logits, trace) = net.forward_from_cache(&batch, true, &mut dropout_rng)?;
                    phases.rest += secs(t);
                    (logits, (None, trace.rest))
                }
            };
            let (l1, rest) = trace;

            let t = Instant::now();
            let xent = softmax_xent(&logits, &batch_labels)?;
            let (mut grads, upstream) = net.backward_rest(&rest, &xent.d_logits)?;
            phases.rest += secs(t);

            if !net.is_frozen() {
                let l1 = l1.ok_or_else(|| Error::Internal("layer-1 trace missing".into()))?;
                let t = Instant::now();
                let d_features = net.feature_grad(&rest, &upstream)?;
                grads.merge(net.backward_layer1(&l1, &d_features)?);
                phases.layer1_backward += secs(t);
            }

            let t = Instant::now();
            optimizer_step(net, &grads, &mut opt, cfg.learning_rate)?;
            phases.rest += secs(t);

            loss_sum += xent.loss as f64 * rows.len() as f64;
            steps += 1;
        }
        let wall = secs(epoch_start);

        let t = Instant::now();
        let acc = evaluate_tensor(net, &val_x, &val_labels)?;
        let eval_seconds = secs(t);

        let record = EpochRecord {
            epoch,
            mean_loss: loss_sum / n as f64,
            val_accuracy: acc,
            wall_clock_seconds: wall,
            eval_seconds,
            steps,
            phase_seconds: phases,
        };
        on_epoch(&record);
        records.push(record);
    }

    let total_steps = records.iter().map(|r| r.steps).sum();
    let loop_seconds: f64 = records.iter().map(|r| r.wall_clock_seconds).sum();
    Ok(TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        arch: net.arch(),
        network: net.config().clone(),
        config: cfg.clone(),
        dataset: train_ds.name.clone(),
        train_size: n,
        validation_size: split.validation.len(),
        first_epoch_seconds: records[0].wall_clock_seconds,
        best_val_accuracy: records.iter().map(|r| r.val_accuracy).fold(0.0, f64::max),
        final_val_accuracy: records.last().map(|r| r.val_accuracy).unwrap_or(0.0),
        epochs: records,
        cache_seconds,
        total_seconds: cache_seconds + loop_seconds,
        total_steps,
    })
}

/// Builds the 28×28 network for `arch` from the config's seed and dropout
/// rate and trains it.
pub fn train_arch(
    arch: Arch,
    split: &Split,
    cfg: &TrainConfig,
    bank: &KernelBank,
) -> Result<(Network<f32>, TrainReport)> {
    train_arch_with(arch, split, cfg, bank, |_| {})
}

pub fn train_arch_with(
    arch: Arch,
    split: &Split,
    cfg: &TrainConfig,
    bank: &KernelBank,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Network<f32>, TrainReport)> {
    cfg.validate()?;
    let mut net = Network::build(
        NetworkConfig::mnist(arch, cfg.dropout_rate, cfg.seed),
        Some(bank),
    )?;
    let report = train_with(&mut net, split, cfg, on_epoch)?;
    Ok((net, report))
}
