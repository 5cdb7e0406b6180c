use serde::{Deserialize, Serialize};

use super::{train_arch, TrainConfig, TrainReport};
use crate::data::Split;
use crate::error::{Error, Result};
use crate::kernel_bank::KernelBank;
use crate::network::Arch;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub schema_version: u32,
    /// GFNN seconds / CNN seconds over the steady-state epochs (first epoch
    /// excluded when there is more than one), with GFNN's cache construction
    /// counted on its side.
    pub time_ratio: f64,
    /// Same ratio over every epoch, i.e. `totalSeconds` of both reports.
    pub end_to_end_ratio: f64,
    /// GFNN final validation accuracy minus CNN's.
    pub accuracy_delta: f64,
    pub first_epoch_seconds: FirstEpoch,
    /// `[cnn, gfnn]`
    pub reports: Vec<TrainReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstEpoch {
    pub cnn: f64,
    pub gfnn: f64,
}

impl BenchReport {
    pub fn cnn(&self) -> &TrainReport {
        &self.reports[0]
    }

    pub fn gfnn(&self) -> &TrainReport {
        &self.reports[1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes")
    }
}

/// Trains a CNN and a GFNN on the same data, seed and budget and compares
/// their time and accuracy.
pub fn bench_compare(
    split: &Split,
    cnn_cfg: &TrainConfig,
    gfnn_cfg: &TrainConfig,
    bank: &KernelBank,
) -> Result<BenchReport> {
    if !cnn_cfg.same_budget(gfnn_cfg) {
        return Err(Error::Config(
            "mismatched budgets: epochs, batch size, learning rate, dropout, seed, train size and optimizer must agree"
                .into(),
        ));
    }
    let (_, cnn) = train_arch(Arch::Cnn, split, cnn_cfg, bank)?;
    let (_, gfnn) = train_arch(Arch::Gfnn, split, gfnn_cfg, bank)?;
    Ok(compare(cnn, gfnn))
}

/// Builds the comparison from two finished reports.
pub fn compare(cnn: TrainReport, gfnn: TrainReport) -> BenchReport {
    let steady = |r: &TrainReport| r.steady_seconds() + r.cache_seconds;
    BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        time_ratio: steady(&gfnn) / steady(&cnn),
        end_to_end_ratio: gfnn.total_seconds / cnn.total_seconds,
        accuracy_delta: gfnn.final_val_accuracy - cnn.final_val_accuracy,
        first_epoch_seconds: FirstEpoch {
            cnn: cnn.first_epoch_seconds,
            gfnn: gfnn.first_epoch_seconds,
        },
        reports: vec![cnn, gfnn],
    }
}
