use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{train_arch, TrainConfig, TrainReport};
use crate::data::Split;
use crate::error::{Error, Result};
use crate::kernel_bank::KernelBank;
use crate::network::Arch;

pub const SWEEP_HEADER: &str = "axisValue,arch,accuracy,totalSeconds";
const FAILED: &str = "ERR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    BatchSize,
    TrainSize,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch-size" | "batchSize" => Ok(SweepAxis::BatchSize),
            "train-size" | "trainSize" => Ok(SweepAxis::TrainSize),
            other => Err(Error::Parameter(format!("unknown sweep axis {other:?}"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::BatchSize => "batch-size",
            SweepAxis::TrainSize => "train-size",
        })
    }
}

/// One cell; `None` marks a failed run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: usize,
    pub arch: Arch,
    pub accuracy: Option<f64>,
    pub total_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| FAILED.into())
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_HEADER.split(','))
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.axis_value.to_string(),
                r.arch.to_string(),
                cell(r.accuracy),
                cell(r.total_seconds),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Data(format!("sweep CSV: {msg}"));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?;
        if header.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
            return Err(bad(format!("header must be {SWEEP_HEADER:?}")));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s == FAILED {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("bad number {s:?}")))
            }
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", rec.len())));
            }
            rows.push(SweepRow {
                axis_value: rec[0]
                    .parse()
                    .map_err(|_| bad(format!("bad axis value {:?}", &rec[0])))?,
                arch: rec[1].parse()?,
                accuracy: num(&rec[2])?,
                total_seconds: num(&rec[3])?,
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub table: SweepTable,
    /// Parallel to `table.rows`; the error text for failed cells.
    pub outcomes: Vec<std::result::Result<TrainReport, String>>,
}

/// The base config with one axis overridden, per architecture. The CNN never
/// uses the cache; each GFNN cell gets its own temporary cache.
pub fn cell_config(axis: SweepAxis, value: usize, arch: Arch, base: &TrainConfig) -> TrainConfig {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::BatchSize => cfg.batch_size = value,
        SweepAxis::TrainSize => cfg.train_size = Some(value),
    }
    cfg.use_cache = base.use_cache && arch == Arch::Gfnn;
    cfg.cache_path = None;
    cfg
}

/// One run per (value, architecture) in axis order, CNN first. A failing
/// cell is recorded and the sweep carries on.
pub fn sweep(
    axis: SweepAxis,
    values: &[usize],
    base: &TrainConfig,
    split: &Split,
    bank: &KernelBank,
    mut on_cell: impl FnMut(&SweepRow),
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Parameter("sweep needs at least one value".into()));
    }
    let mut table = SweepTable::default();
    let mut outcomes = Vec::new();
    for &value in values {
        for arch in Arch::BOTH {
            let cfg = cell_config(axis, value, arch, base);
            let outcome = train_arch(arch, split, &cfg, bank).map(|(_, r)| r);
            let row = match &outcome {
                Ok(r) => SweepRow {
                    axis_value: value,
                    arch,
                    accuracy: Some(r.final_val_accuracy),
                    total_seconds: Some(r.total_seconds),
                },
                Err(_) => SweepRow {
                    axis_value: value,
                    arch,
                    accuracy: None,
                    total_seconds: None,
                },
            };
            on_cell(&row);
            table.rows.push(row);
            outcomes.push(outcome.map_err(|e| e.to_string()));
        }
    }
    Ok(SweepResult { table, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let table = SweepTable {
            rows: vec![
                SweepRow {
                    axis_value: 500,
                    arch: Arch::Cnn,
                    accuracy: Some(0.4312),
                    total_seconds: Some(12.5),
                },
                SweepRow {
                    axis_value: 500,
                    arch: Arch::Gfnn,
                    accuracy: None,
                    total_seconds: None,
                },
            ],
        };
        let text = table.to_csv();
        assert!(text.starts_with("axisValue,arch,accuracy,totalSeconds\n"));
        assert!(text.contains("500,gfnn,ERR,ERR"));
        assert_eq!(SweepTable::from_csv(&text).unwrap(), table);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(SweepTable::from_csv("a,b,c,d\n1,cnn,0.5,1\n").is_err());
    }

    #[test]
    fn cell_configs() {
        let base = TrainConfig {
            use_cache: true,
            ..TrainConfig::default()
        };
        let c = cell_config(SweepAxis::TrainSize, 500, Arch::Cnn, &base);
        assert_eq!((c.train_size, c.use_cache), (Some(500), false));
        let g = cell_config(SweepAxis::BatchSize, 64, Arch::Gfnn, &base);
        assert_eq!((g.batch_size, g.use_cache), (64, true));
    }
}
