//! End-to-end runs of the `mv3mr` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mv3mr::io::{load_model, read_matrix, save_dataset};
use mv3mr::kernel::DistanceMetric;
use mv3mr::linalg::Matrix;
use mv3mr::synth::{format_spec, SyntheticSpec};
use mv3mr::{Dataset, Split, View};
use tempfile::TempDir;

fn mv3mr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mv3mr"))
        .args(args)
        .output()
        .expect("failed to launch mv3mr")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_spec(views: usize) -> SyntheticSpec {
    SyntheticSpec {
        seed: 3,
        n_labeled: 12,
        n_unlabeled: 28,
        n_test: 10,
        n_labels: 2,
        informativeness: [1.0, 0.3, 0.0][..views].to_vec(),
        dim: 4,
        ..SyntheticSpec::default()
    }
}

/// Writes a spec file and runs `synth`; returns the manifest path.
fn synth(dir: &Path, spec: &SyntheticSpec) -> PathBuf {
    let spec_path = dir.join("spec.txt");
    fs::write(&spec_path, format_spec(spec)).unwrap();
    let out_dir = dir.join("data");
    assert_ok(&mv3mr(&["synth", "--spec", path_str(&spec_path), "--out-dir", path_str(&out_dir)]));
    out_dir.join("manifest.txt")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_then_predict_on_training_rows_reproduces_transductive_scores() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth(tmp.path(), &small_spec(2));
    let config = write_config(tmp.path(), "k_in = 5\ngamma_b = 1e-4\n");
    let model_path = tmp.path().join("model.txt");
    let trace_path = tmp.path().join("trace.txt");
    assert_ok(&mv3mr(&[
        "train",
        "--manifest",
        path_str(&manifest),
        "--config",
        path_str(&config),
        "--out-model",
        path_str(&model_path),
        "--out-trace",
        path_str(&trace_path),
    ]));
    let model = load_model(&model_path).unwrap();
    let trace: Vec<f64> = fs::read_to_string(&trace_path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(trace, model.objective_trace);

    let scores_path = tmp.path().join("scores.txt");
    assert_ok(&mv3mr(&[
        "predict",
        "--model",
        path_str(&model_path),
        "--manifest",
        path_str(&manifest),
        "--split",
        "train",
        "--out-scores",
        path_str(&scores_path),
    ]));
    let scores = read_matrix(&scores_path).unwrap();
    let internal = model.predict_transductive().scores;
    assert_eq!(scores.shape(), internal.shape());
    assert!((&scores - &internal).amax() <= 1e-10);

    // the test split goes through the inductive path and is written too
    assert_ok(&mv3mr(&[
        "predict",
        "--model",
        path_str(&model_path),
        "--manifest",
        path_str(&manifest),
        "--out-scores",
        path_str(&scores_path),
    ]));
    assert_eq!(read_matrix(&scores_path).unwrap().shape(), (10, 2));
}

#[test]
fn evaluate_reports_the_worked_average_precision() {
    let tmp = TempDir::new().unwrap();
    // sample 0 is the lone labeled row; samples 1..=4 form the test split
    let truth = Matrix::from_column_slice(5, 1, &[1.0, 1.0, -1.0, 1.0, -1.0]);
    let mut labels = Matrix::zeros(5, 1);
    labels[(0, 0)] = 1.0;
    let data = Dataset {
        views: vec![View::features("x", Matrix::from_fn(5, 1, |i, _| i as f64), DistanceMetric::L2)],
        labels,
        truth: Some(truth),
        split: Split {
            labeled: vec![0],
            unlabeled: vec![],
            test: vec![1, 2, 3, 4],
        },
    };
    let manifest = save_dataset(&tmp.path().join("data"), &data).unwrap();
    let scores = tmp.path().join("scores.txt");
    fs::write(&scores, "4 1\n4\n3\n2\n1\n").unwrap();
    let report_path = tmp.path().join("report.txt");
    assert_ok(&mv3mr(&[
        "evaluate",
        "--scores",
        path_str(&scores),
        "--manifest",
        path_str(&manifest),
        "--out-report",
        path_str(&report_path),
    ]));
    let report = fs::read_to_string(&report_path).unwrap();
    let value = |key: &str| -> String {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap_or_else(|| panic!("{key} missing from report:\n{report}"))
            .to_string()
    };
    let ap: f64 = value("AP[0]").parse().unwrap();
    assert!((ap - 28.0 / 33.0).abs() <= 1e-15, "AP = {ap}");
    assert_eq!(value("mAP").parse::<f64>().unwrap(), ap);
    // a single label leaves every sample with a full or empty label set
    assert_eq!(value("RL"), "undefined");

    // without --out-report the same text goes to stdout
    let out = mv3mr(&["evaluate", "--scores", path_str(&scores), "--manifest", path_str(&manifest)]);
    assert_ok(&out);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), report);
}

#[test]
fn compare_with_one_view_gives_identical_columns() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth(tmp.path(), &small_spec(1));
    let config = write_config(tmp.path(), "k_in = 5\n");
    let table_path = tmp.path().join("table.txt");
    assert_ok(&mv3mr(&[
        "compare",
        "--manifest",
        path_str(&manifest),
        "--config",
        path_str(&config),
        "--labeled-count",
        "10",
        "--repeats",
        "3",
        "--seed",
        "5",
        "--out-table",
        path_str(&table_path),
    ]));
    let table = fs::read_to_string(&table_path).unwrap();
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(header.len(), 9);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row[1], row[2], "mAP");
        assert_eq!(row[3], row[4], "mAUC");
        assert_eq!(row[5], row[6], "RL");
        assert_eq!(row[7].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn compare_is_deterministic_under_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth(tmp.path(), &small_spec(2));
    let config = write_config(tmp.path(), "k_in = 5\n");
    let run = |name: &str| {
        let path = tmp.path().join(name);
        assert_ok(&mv3mr(&[
            "compare",
            "--manifest",
            path_str(&manifest),
            "--config",
            path_str(&config),
            "--labeled-count",
            "10",
            "--repeats",
            "2",
            "--out-table",
            path_str(&path),
        ]));
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}

#[test]
fn synth_is_byte_identical_for_the_same_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let spec = small_spec(3);
    let ma = synth(a.path(), &spec);
    let mb = synth(b.path(), &spec);
    let files = |m: &Path| {
        let mut names: Vec<_> = fs::read_dir(m.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        names.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>()
    };
    assert_eq!(files(&ma), files(&mb));
}

#[test]
fn unknown_flag_fails() {
    let out = mv3mr(&["train", "--manifest", "m.txt", "--out-model", "x", "--bogus"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_manifest_fails_with_message() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.txt");
    let model = tmp.path().join("model.txt");
    let out = mv3mr(&["train", "--manifest", path_str(&missing), "--out-model", path_str(&model)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nope.txt"), "{err}");
    assert!(!model.exists());
}

#[test]
fn out_of_range_config_fails_before_training() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth(tmp.path(), &small_spec(2));
    let model = tmp.path().join("model.txt");
    for bad in ["gamma_a = -1\n", "gamma_o = 1.5\n", "k_in = 0\n", "loss = cubic\n", "gamma_x = 1\n"] {
        let config = write_config(tmp.path(), bad);
        let out = mv3mr(&[
            "train",
            "--manifest",
            path_str(&manifest),
            "--config",
            path_str(&config),
            "--out-model",
            path_str(&model),
        ]);
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{bad}");
        assert!(!model.exists(), "{bad}");
    }
}

#[test]
fn failed_model_write_leaves_nothing_behind() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth(tmp.path(), &small_spec(1));
    let config = write_config(tmp.path(), "k_in = 5\n");
    let out_dir = tmp.path().join("out");
    // the target is an occupied directory, so the final rename must fail
    let target = out_dir.join("model.txt");
    fs::create_dir_all(target.join("occupied")).unwrap();
    let out = mv3mr(&[
        "train",
        "--manifest",
        path_str(&manifest),
        "--config",
        path_str(&config),
        "--out-model",
        path_str(&target),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let entries: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("model.txt")]);
    assert!(target.is_dir());
}

#[test]
fn gram_views_train_and_predict() {
    let tmp = TempDir::new().unwrap();
    let spec = small_spec(2);
    let mut data = mv3mr::synth::generate_synthetic(&spec).unwrap();
    // replace the second view by its linear Gram matrix over all samples
    let x = match &data.views[1].data {
        mv3mr::ViewData::Features { matrix, .. } => matrix.clone(),
        _ => unreachable!(),
    };
    data.views[1] = View::gram("linear", &x * x.transpose());
    let manifest = save_dataset(&tmp.path().join("data"), &data).unwrap();
    let config = write_config(tmp.path(), "k_in = 5\n");
    let model = tmp.path().join("model.txt");
    assert_ok(&mv3mr(&[
        "train",
        "--manifest",
        path_str(&manifest),
        "--config",
        path_str(&config),
        "--out-model",
        path_str(&model),
    ]));
    let scores = tmp.path().join("scores.txt");
    assert_ok(&mv3mr(&[
        "predict",
        "--model",
        path_str(&model),
        "--manifest",
        path_str(&manifest),
        "--split",
        "test",
        "--out-scores",
        path_str(&scores),
    ]));
    let s = read_matrix(&scores).unwrap();
    assert_eq!(s.shape(), (10, 2));
    assert!(s.iter().all(|v| v.is_finite()));
}
