mod common;

use common::synthetic_split;
use gfnn_core::data::{synthetic_digits, Dataset, Split};
use gfnn_core::kernel_bank::build_bank;
use gfnn_core::network::{Arch, Network, NetworkConfig, ParamId};
use gfnn_core::tensor::Tensor;
use gfnn_core::trainer::{
    bench_compare, evaluate, sweep, train, train_arch, SweepAxis, SweepTable, TrainConfig,
    SWEEP_HEADER,
};

fn net(arch: Arch, seed: u64) -> Network<f32> {
    Network::build(NetworkConfig::mnist(arch, 0.5, seed), Some(&build_bank())).unwrap()
}

fn quick(epochs: usize, batch_size: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn step_count_is_epochs_times_batches() {
    let split = synthetic_split(100, 20, 0);
    let r = train(&mut net(Arch::Gfnn, 0), &split, &quick(2, 10, 0)).unwrap();
    assert_eq!(r.total_steps, 20);
    assert_eq!(r.epochs.len(), 2);
    assert!(r.epochs.iter().all(|e| e.steps == 10));

    let r = train(&mut net(Arch::Gfnn, 0), &split, &quick(1, 30, 0)).unwrap();
    assert_eq!(r.total_steps, 4);
}

#[test]
fn loss_falls_on_a_small_fixture() {
    let d = synthetic_digits(42, 2);
    let split = Split::holdout(&d, 10).unwrap();
    for arch in Arch::BOTH {
        let r = train(&mut net(arch, 4), &split, &quick(10, 8, 4)).unwrap();
        let l = r.losses();
        assert!(l[9] < l[0], "{arch}: {l:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let split = synthetic_split(120, 30, 1);
    for arch in Arch::BOTH {
        let run = || train_arch(arch, &split, &quick(2, 16, 77), &build_bank()).unwrap();
        let (na, a) = run();
        let (nb, b) = run();
        assert_eq!(a.losses(), b.losses());
        assert_eq!(a.accuracies(), b.accuracies());
        assert!(na.params_bit_eq(&nb));
    }
}

#[test]
fn different_seeds_give_different_runs() {
    let split = synthetic_split(120, 30, 1);
    let (_, a) = train_arch(Arch::Cnn, &split, &quick(1, 16, 1), &build_bank()).unwrap();
    let (_, b) = train_arch(Arch::Cnn, &split, &quick(1, 16, 2), &build_bank()).unwrap();
    assert_ne!(a.losses(), b.losses());
}

/// Zero every weight and bias except dense2's bias, which then decides every
/// prediction.
fn constant_predictor(class: usize) -> Network<f32> {
    let mut n = net(Arch::Cnn, 0);
    for id in ParamId::ALL {
        let shape = n.param(id).shape().to_vec();
        n.set_param(id, Tensor::zeros(&shape).unwrap()).unwrap();
    }
    let mut b = vec![0.0f32; 10];
    b[class] = 1.0;
    n.set_param(ParamId::Dense2B, Tensor::new(&[10], b).unwrap())
        .unwrap();
    n
}

#[test]
fn constant_prediction_scores_its_class_share() {
    let d = synthetic_digits(50, 0);
    assert_eq!(evaluate(&constant_predictor(3), &d).unwrap(), 0.1);
    let only = d.select("threes", &[3, 13, 23]).unwrap();
    assert_eq!(evaluate(&constant_predictor(3), &only).unwrap(), 1.0);
    assert_eq!(evaluate(&constant_predictor(4), &only).unwrap(), 0.0);
}

#[test]
fn evaluation_needs_data() {
    let empty = Dataset::new("empty", vec![], vec![]).unwrap();
    assert!(evaluate(&net(Arch::Cnn, 0), &empty).is_err());
}

#[test]
fn timings_are_consistent() {
    let split = synthetic_split(100, 20, 3);
    let cfg = TrainConfig {
        use_cache: true,
        ..quick(2, 25, 3)
    };
    let r = train(&mut net(Arch::Gfnn, 3), &split, &cfg).unwrap();
    let loops: f64 = r.epochs.iter().map(|e| e.wall_clock_seconds).sum();
    assert!((r.total_seconds - (loops + r.cache_seconds)).abs() < 1e-9);
    assert_eq!(r.first_epoch_seconds, r.epochs[0].wall_clock_seconds);
    for e in &r.epochs {
        assert!(e.wall_clock_seconds > 0.0 && e.eval_seconds > 0.0);
        assert!(e.phase_seconds.total() <= e.wall_clock_seconds);
    }
}

#[test]
fn guarded_configurations_fail_before_training() {
    let split = synthetic_split(40, 10, 0);
    let cache_on_cnn = TrainConfig {
        use_cache: true,
        ..quick(1, 8, 0)
    };
    let err = train(&mut net(Arch::Cnn, 0), &split, &cache_on_cnn).unwrap_err();
    assert!(err
        .to_string()
        .contains("cache requires frozen first layer"));

    let too_many = TrainConfig {
        train_size: Some(41),
        ..quick(1, 8, 0)
    };
    assert!(train(&mut net(Arch::Gfnn, 0), &split, &too_many).is_err());
    assert!(train(&mut net(Arch::Gfnn, 0), &split, &quick(0, 8, 0)).is_err());
    assert!(train(&mut net(Arch::Gfnn, 0), &split, &quick(1, 0, 0)).is_err());
}

#[test]
fn subsampled_training_reports_its_size() {
    let split = synthetic_split(200, 20, 0);
    let cfg = TrainConfig {
        train_size: Some(50),
        ..quick(1, 10, 7)
    };
    let r = train(&mut net(Arch::Gfnn, 7), &split, &cfg).unwrap();
    assert_eq!(r.train_size, 50);
    assert_eq!(r.total_steps, 5);
    assert_eq!(r.validation_size, 20);
}

#[test]
fn bench_report_has_schema_fields() {
    let split = synthetic_split(64, 16, 2);
    let cnn = quick(1, 16, 2);
    let gfnn = TrainConfig {
        use_cache: true,
        ..cnn.clone()
    };
    let b = bench_compare(&split, &cnn, &gfnn, &build_bank()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
    for key in [
        "schemaVersion",
        "timeRatio",
        "endToEndRatio",
        "accuracyDelta",
        "firstEpochSeconds",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["arch"], "cnn");
    assert_eq!(reports[1]["arch"], "gfnn");
    let expect = b.gfnn().final_val_accuracy - b.cnn().final_val_accuracy;
    assert_eq!(b.accuracy_delta, expect);
    assert_eq!(
        b.end_to_end_ratio,
        b.gfnn().total_seconds / b.cnn().total_seconds
    );

    let other = TrainConfig { epochs: 2, ..gfnn };
    let err = bench_compare(&split, &cnn, &other, &build_bank()).unwrap_err();
    assert!(err.to_string().contains("mismatched budgets"));
}

#[test]
fn sweep_emits_two_rows_per_value() {
    let split = synthetic_split(60, 12, 5);
    let base = TrainConfig {
        use_cache: true,
        ..quick(1, 20, 5)
    };
    let mut seen = 0;
    let out = sweep(
        SweepAxis::TrainSize,
        &[20, 40, 61],
        &base,
        &split,
        &build_bank(),
        |_| seen += 1,
    )
    .unwrap();
    assert_eq!(seen, 6);
    let rows = &out.table.rows;
    assert_eq!(rows.len(), 6);
    assert_eq!(
        rows.iter()
            .map(|r| (r.axis_value, r.arch))
            .collect::<Vec<_>>(),
        vec![
            (20, Arch::Cnn),
            (20, Arch::Gfnn),
            (40, Arch::Cnn),
            (40, Arch::Gfnn),
            (61, Arch::Cnn),
            (61, Arch::Gfnn)
        ]
    );
    // 61 exceeds the 60 training samples: recorded as failed, sweep continues.
    assert!(rows[4].accuracy.is_none() && rows[5].accuracy.is_none());
    assert!(rows[..4].iter().all(|r| r.accuracy.is_some()));

    let csv = out.table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().last().unwrap().ends_with("ERR,ERR"));
    assert_eq!(SweepTable::from_csv(&csv).unwrap(), out.table);
}

#[test]
fn batch_sweep_changes_only_batch_size() {
    let split = synthetic_split(40, 10, 5);
    let out = sweep(
        SweepAxis::BatchSize,
        &[20],
        &quick(1, 8, 5),
        &split,
        &build_bank(),
        |_| {},
    )
    .unwrap();
    for r in out.outcomes {
        let r = r.unwrap();
        assert_eq!(r.config.batch_size, 20);
        assert_eq!(r.total_steps, 2);
    }
}

#[test]
fn report_round_trips_through_json() {
    let split = synthetic_split(30, 10, 0);
    let r = train(&mut net(Arch::Gfnn, 0), &split, &quick(1, 10, 0)).unwrap();
    let back: gfnn_core::trainer::TrainReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn training_time_grows_with_train_size() {
    let split = synthetic_split(400, 20, 8);
    let base = TrainConfig {
        use_cache: true,
        ..quick(1, 50, 8)
    };
    let out = sweep(SweepAxis::TrainSize, &[100, 200, 400], &base, &split, &build_bank(), |_| {}).unwrap();
    for arch in Arch::BOTH {
        let t: Vec<f64> = out
            .table
            .rows
            .iter()
            .filter(|r| r.arch == arch)
            .map(|r| r.total_seconds.unwrap())
            .collect();
        for w in t.windows(2) {
            assert!(w[1] >= 0.9 * w[0], "{arch}: {t:?}");
        }
    }
}
