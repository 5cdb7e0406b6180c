use std::path::Path;
use std::process::{Command, Output};

fn gfnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfnn"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GFNN_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn entries(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().count()
}

const SMALL: &[&str] = &[
    "--synthetic",
    "--synthetic-train",
    "60",
    "--synthetic-val",
    "20",
    "--batch-size",
    "20",
];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL.iter().copied()).collect()
}

#[test]
fn kernels_json_has_41_entries_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(
        &["kernels", "--format", "json", "--out", "bank.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("bank.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 41);
    assert_eq!(arr[0]["name"], "roberts_0");
    let back: gfnn_core::kernel_bank::KernelBank = serde_json::from_str(&text).unwrap();
    assert_eq!(back, gfnn_core::kernel_bank::build_bank());

    let o = gfnn(&["kernels"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

#[test]
fn kernels_pgm_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(
        &[
            "kernels",
            "--format",
            "pgm",
            "--out",
            "bank.pgm",
            "--cell",
            "4",
            "--gutter",
            "2",
            "--columns",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bytes = std::fs::read(dir.path().join("bank.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5"));
    let img = gfnn_core::image::GrayImage::from_pgm(&bytes).unwrap();
    assert_eq!(img.width(), 7 * 12 + 8 * 2);
    assert_eq!(img.height(), 6 * 12 + 7 * 2);
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(&["kernels", "--out", "missing/bank.json"], dir.path());
    assert_eq!(code(&o), 2);
    let mut args = with_small(&[
        "train",
        "--arch",
        "gfnn",
        "--epochs",
        "1",
        "--out-report",
        "nope/r.json",
    ]);
    args.extend(["--out-checkpoint", "m.gfnn"]);
    let o = gfnn(&args, dir.path());
    assert_eq!(code(&o), 2);
    assert_eq!(entries(dir.path()), 0);
}

#[test]
fn cache_on_cnn_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(&["train", "--arch", "cnn", "--cache"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cache requires frozen first layer"));
    assert_eq!(entries(dir.path()), 0);
}

#[test]
fn invalid_flags_exit_1_without_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["train"],
        vec!["train", "--arch", "lenet", "--synthetic"],
        vec!["train", "--arch", "gfnn", "--synthetic", "--epochs", "0"],
        vec!["train", "--arch", "gfnn", "--synthetic", "--dropout", "1.5"],
        vec![
            "train",
            "--arch",
            "gfnn",
            "--synthetic",
            "--train-size",
            "999999",
        ],
        vec!["sweep", "--axis", "depth", "--synthetic"],
        vec!["eval", "--split", "val", "--synthetic"],
        vec!["bench", "--synthetic", "--batch-size", "0"],
        vec!["--no-such-flag"],
    ] {
        let o = gfnn(&args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }
    assert_eq!(entries(dir.path()), 0);
    assert_eq!(code(&gfnn(&["--help"], dir.path())), 0);
}

#[test]
fn missing_data_exits_3_with_instructions() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(&["train", "--arch", "gfnn"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("train-images-idx3-ubyte"));
    let o = gfnn(
        &["train", "--arch", "gfnn", "--data-dir", "nowhere"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("--synthetic"));
    assert_eq!(entries(dir.path()), 0);
}

#[test]
fn synthetic_train_then_eval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(
        &with_small(&[
            "train", "--arch", "gfnn", "--epochs", "2", "--seed", "3", "--cache",
        ]),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().filter(|l| l.contains(" epoch ")).count(), 2);

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("train_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["arch"], "gfnn");
    assert_eq!(report["trainSize"], 60);
    assert_eq!(report["epochs"].as_array().unwrap().len(), 2);
    let final_acc = report["finalValAccuracy"].as_f64().unwrap();

    let eval = ["eval", "--checkpoint", "model.gfnn", "--out-json", "e.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = gfnn(&with_small(&eval), dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap())
                .unwrap();
        runs.push(v["accuracy"].as_f64().unwrap());
        assert_eq!(v["samples"], 20);
        assert_eq!(v["split"], "val");
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], final_acc);

    let o = gfnn(
        &with_small(&["eval", "--checkpoint", "model.gfnn", "--split", "test"]),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn train_size_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(
        &with_small(&[
            "train",
            "--arch",
            "cnn",
            "--epochs",
            "1",
            "--train-size",
            "30",
            "--seed",
            "7",
        ]),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("train_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["trainSize"], 30);
    assert_eq!(report["config"]["seed"], 7);
}

#[test]
fn corrupt_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.gfnn"), b"GFNN\x01\x00junk").unwrap();
    let o = gfnn(
        &["eval", "--checkpoint", "bad.gfnn", "--synthetic"],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn corrupt_dataset_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mnist");
    std::fs::create_dir(&data).unwrap();
    std::fs::write(data.join("train-images-idx3-ubyte"), [0u8; 40]).unwrap();
    std::fs::write(data.join("train-labels-idx1-ubyte"), [0u8; 12]).unwrap();
    let o = gfnn(
        &[
            "train",
            "--arch",
            "gfnn",
            "--epochs",
            "1",
            "--data-dir",
            "mnist",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn sweep_writes_two_rows_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(
        &with_small(&[
            "sweep",
            "--axis",
            "batch-size",
            "--values",
            "30",
            "--epochs",
            "1",
        ]),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "axisValue,arch,accuracy,totalSeconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("30,cnn,") && lines[2].starts_with("30,gfnn,"));

    let o = gfnn(
        &with_small(&[
            "sweep",
            "--axis",
            "train-size",
            "--values",
            "20,40,60",
            "--epochs",
            "1",
            "--out",
            "s.csv",
        ]),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(!csv.contains("ERR"));
}

#[test]
fn bench_writes_paired_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = gfnn(&with_small(&["bench", "--epochs", "1"]), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("timeRatio"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap())
            .unwrap();
    assert!(v["timeRatio"].is_number() && v["accuracyDelta"].is_number());
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    assert_eq!(v["reports"][1]["config"]["useCache"], true);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "synthetic = true\nsynthetic-train = 40\nsynthetic-val = 10\nepochs = 2\nbatch-size = 20\nseed = 5\n",
    )
    .unwrap();
    let o = gfnn(
        &[
            "--config", "run.toml", "train", "--arch", "gfnn", "--epochs", "1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("train_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["epochs"].as_array().unwrap().len(), 1);
    assert_eq!(report["config"]["batchSize"], 20);
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["trainSize"], 40);

    std::fs::write(dir.path().join("bad.toml"), "epoch = 2\n").unwrap();
    let o = gfnn(
        &["--config", "bad.toml", "train", "--arch", "gfnn"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn outputs_match_shipped_schemas() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&gfnn(&["kernels", "--out", "bank.json"], dir.path())),
        0
    );
    assert_eq!(
        code(&gfnn(
            &with_small(&["train", "--arch", "gfnn", "--epochs", "1"]),
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&gfnn(&with_small(&["bench", "--epochs", "1"]), dir.path())),
        0
    );
    assert_eq!(
        code(&gfnn(
            &with_small(&[
                "eval",
                "--checkpoint",
                "model.gfnn",
                "--out-json",
                "eval.json"
            ]),
            dir.path()
        )),
        0
    );
    let schemas = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let read = |name: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(schemas.join(name)).unwrap()).unwrap()
    };
    let train_schema = read("train_report.schema.json");
    for (file, schema) in [
        ("bank.json", "kernel_bank.schema.json"),
        ("train_report.json", "train_report.schema.json"),
        ("bench.json", "bench_report.schema.json"),
        ("eval.json", "eval_report.schema.json"),
    ] {
        let schema = read(schema);
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(file)).unwrap()).unwrap();
        let validator = jsonschema::options()
            .with_resource(
                train_schema["$id"].as_str().unwrap(),
                jsonschema::Resource::from_contents(train_schema.clone()).unwrap(),
            )
            .build(&schema)
            .unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{file}: {errors:?}");
    }
}
