use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::optimizer::OptimizerKind;
use crate::error::{Error, Result};
use crate::network::{Arch, NetworkConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_DROPOUT: f64 = 0.5;
pub const DEFAULT_BATCH_SIZE: usize = 128;

/// 20 epochs for full-size runs, 100 when training on 2000 samples or fewer.
pub fn default_epochs(train_size: usize) -> usize {
    if train_size <= 2000 {
        100
    } else {
        20
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub seed: u64,
    pub use_cache: bool,
    /// Where to keep the feature cache; a temporary file when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    /// Seeded subsample of the training split; the full split when unset.
    #[serde(default)]
    pub train_size: Option<usize>,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            dropout_rate: DEFAULT_DROPOUT,
            seed: 0,
            use_cache: false,
            cache_path: None,
            train_size: None,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.train_size == Some(0) {
            return Err(Error::Config("train size must be at least 1".into()));
        }
        Ok(())
    }

    /// True when the two configs train on the same budget: everything but
    /// the cache settings agrees.
    pub fn same_budget(&self, other: &TrainConfig) -> bool {
        self.epochs == other.epochs
            && self.batch_size == other.batch_size
            && self.learning_rate == other.learning_rate
            && self.dropout_rate == other.dropout_rate
            && self.seed == other.seed
            && self.train_size == other.train_size
            && self.optimizer == other.optimizer
    }
}

/// Wall-clock seconds per training phase within one epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseSeconds {
    /// conv1 → relu → pool.
    pub layer1_forward: f64,
    /// Everything that exists only to train layer 1: conv2's input gradient,
    /// the pool/relu backward of layer 1, and conv1's parameter gradients.
    pub layer1_backward: f64,
    /// Layers 2 onward, forward and backward, loss, and the optimizer step.
    pub rest: f64,
    /// Batch assembly, including reads from the feature cache.
    pub data_load: f64,
}

impl PhaseSeconds {
    pub fn total(&self) -> f64 {
        self.layer1_forward + self.layer1_backward + self.rest + self.data_load
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss, batches weighted by their size.
    pub mean_loss: f64,
    pub val_accuracy: f64,
    /// Training-loop time; validation is excluded and reported separately.
    pub wall_clock_seconds: f64,
    pub eval_seconds: f64,
    pub steps: usize,
    pub phase_seconds: PhaseSeconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainReport {
    pub schema_version: u32,
    pub version: String,
    pub arch: Arch,
    pub network: NetworkConfig,
    pub config: TrainConfig,
    pub dataset: String,
    pub train_size: usize,
    pub validation_size: usize,
    pub epochs: Vec<EpochRecord>,
    /// One-time feature cache construction (0 without cache).
    pub cache_seconds: f64,
    pub first_epoch_seconds: f64,
    /// Cache construction plus every epoch's training loop.
    pub total_seconds: f64,
    pub total_steps: usize,
    pub best_val_accuracy: f64,
    pub final_val_accuracy: f64,
}

impl TrainReport {
    /// Training-loop seconds excluding the first (warm-up) epoch, or all
    /// epochs when there is only one.
    pub fn steady_seconds(&self) -> f64 {
        let skip = usize::from(self.epochs.len() > 1);
        self.epochs
            .iter()
            .skip(skip)
            .map(|e| e.wall_clock_seconds)
            .sum()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_accuracy).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
