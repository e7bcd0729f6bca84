//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_less-trees"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

/// Separable two-class CSV: feature x0 decides the label.
fn separable_csv(dir: &Path, name: &str) -> PathBuf {
    let mut text = String::from("x0,x1,label\n");
    for i in 0..20 {
        let x0 = i as f64;
        let x1 = (i % 5) as f64;
        let label = if i < 10 { "neg" } else { "pos" };
        text.push_str(&format!("{x0},{x1},{label}\n"));
    }
    write_file(dir, name, &text)
}

#[test]
fn scores_on_identity_matrix_are_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_file(dir.path(), "id.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let out = run(&[
        "scores",
        "--data",
        csv.to_str().unwrap(),
        "--scheme",
        "leverage",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["scheme"], "leverage");
    assert_eq!(v["d"], 3);
    let probs = v["probs"].as_array().unwrap();
    let sum: f64 = probs.iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);
    for p in probs {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    }
}

#[test]
fn scores_uniform_needs_only_width() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_file(dir.path(), "m.csv", "5,6\n7,8\n");
    let out = run(&[
        "scores",
        "--data",
        csv.to_str().unwrap(),
        "--scheme",
        "uniform",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["probs"], serde_json::json!([0.5, 0.5]));
}

#[test]
fn train_predict_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let model1 = dir.path().join("m1.json");
    let model2 = dir.path().join("m2.json");
    for model in [&model1, &model2] {
        let out = run(&[
            "train",
            "--data",
            csv.to_str().unwrap(),
            "--header",
            "--label-col",
            "label",
            "--scheme",
            "norm",
            "--k",
            "1",
            "--trees",
            "5",
            "--seed",
            "9",
            "--out",
            model.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(
            stdout(&out).contains("training error 0.0000"),
            "{}",
            stdout(&out)
        );
    }
    // Same seed, byte-identical model files.
    assert_eq!(fs::read(&model1).unwrap(), fs::read(&model2).unwrap());

    let preds = dir.path().join("preds.txt");
    let out = run(&[
        "predict",
        "--model",
        model1.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("classification_error: 0"),
        "{}",
        stdout(&out)
    );
    let lines: Vec<String> = fs::read_to_string(&preds)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines[0], "neg");
    assert_eq!(lines[19], "pos");

    // Cross-check the printed error against a known disagreement: flip one
    // label in the (perfectly fitted) data and the rate must be exactly 1/20.
    let flipped = fs::read_to_string(&csv)
        .unwrap()
        .replacen("0,0,neg", "0,0,pos", 1);
    let flipped_csv = write_file(dir.path(), "flipped.csv", &flipped);
    let out = run(&[
        "predict",
        "--model",
        model1.to_str().unwrap(),
        "--data",
        flipped_csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("classification_error: 0.05"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn predict_without_labels_prints_no_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let model = dir.path().join("m.json");
    run(&[
        "train",
        "--data",
        csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--scheme",
        "uniform",
        "--k",
        "2",
        "--trees",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    let unlabeled = write_file(dir.path(), "u.csv", "0.5,1\n15.5,2\n");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        unlabeled.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(!text.contains("classification_error"), "{text}");
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn rf_warns_that_k_is_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let model = dir.path().join("m.json");
    let out = run(&[
        "train",
        "--data",
        csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--scheme",
        "rf",
        "--k",
        "1",
        "--trees",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("ignored"), "{}", stderr(&out));
}

#[test]
fn feature_count_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let model = dir.path().join("m.json");
    run(&[
        "train",
        "--data",
        csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--scheme",
        "uniform",
        "--k",
        "2",
        "--trees",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]);
    let narrow = write_file(dir.path(), "narrow.csv", "1.0\n2.0\n");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        narrow.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(
        stderr(&out).contains("feature-count mismatch"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn k_larger_than_d_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let out = run(&[
        "train",
        "--data",
        csv.to_str().unwrap(),
        "--header",
        "--label-col",
        "label",
        "--scheme",
        "uniform",
        "--k",
        "99",
        "--trees",
        "2",
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn unreadable_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "scores",
        "--data",
        dir.path().join("missing.csv").to_str().unwrap(),
        "--scheme",
        "norm",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn degenerate_matrix_is_a_compute_error() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = write_file(dir.path(), "z.csv", "0,0\n0,0\n");
    let out = run(&[
        "scores",
        "--data",
        zeros.to_str().unwrap(),
        "--scheme",
        "norm",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn libsvm_input_works() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..20 {
        let label = if i < 10 { -1 } else { 1 };
        text.push_str(&format!("{label} 1:{} 2:{}\n", i as f64, (i % 3) as f64));
    }
    let svm = write_file(dir.path(), "data.svm", &text);
    let model = dir.path().join("m.json");
    let out = run(&[
        "train",
        "--data",
        svm.to_str().unwrap(),
        "--format",
        "libsvm",
        "--scheme",
        "leverage",
        "--k",
        "1",
        "--trees",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        svm.to_str().unwrap(),
        "--format",
        "libsvm",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("classification_error: 0"));
}

#[test]
fn bench_smoke_and_rerun_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let config = write_file(
        dir.path(),
        "exp.conf",
        &format!(
            "# smoke experiment\n\
             data = planted\n\
             planted_n = 120\n\
             planted_d = 8\n\
             planted_informative = 2\n\
             schemes = uniform,norm,rf\n\
             k = 2\n\
             trees = 2\n\
             repetitions = 1\n\
             epsilon = 0.5\n\
             seed = 5\n\
             out = {}\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = run(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let curves = fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,k,rep,tree_index,cum_time_s,test_error,cum_nodes"
    );
    // 3 schemes x 1 rep x 2 trees.
    assert_eq!(curves.lines().count(), 1 + 6);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert!(summary["nodes_to_epsilon"].is_array());

    // Rerun: error and node columns identical (time columns exempt).
    let strip_time = |text: &str| -> Vec<(String, String)> {
        text.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (
                    format!("{},{},{},{}", f[0], f[1], f[2], f[3]),
                    format!("{},{}", f[5], f[6]),
                )
            })
            .collect()
    };
    let first = strip_time(&curves);
    let out = run(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let second = strip_time(&fs::read_to_string(out_dir.join("curves.csv")).unwrap());
    assert_eq!(first, second);
}

#[test]
fn bench_save_models_allows_error_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let config = write_file(
        dir.path(),
        "exp.conf",
        &format!(
            "data = planted\nplanted_n = 100\nplanted_d = 6\nplanted_informative = 2\n\
             schemes = norm\nk = 2\ntrees = 2\nrepetitions = 1\nepsilon = 0.5\nseed = 8\n\
             families = error_vs_trees\nsave_models = true\nout = {}\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = run(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let model_path = out_dir.join("models").join("norm_k2_rep0.json");
    assert!(model_path.exists());
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model_path).unwrap()).unwrap();
    assert_eq!(model["schema_version"], 1);
    assert_eq!(model["t"], 2);
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let csv = separable_csv(dir.path(), "train.csv");
    let m1 = dir.path().join("t1.json");
    let m2 = dir.path().join("t4.json");
    for (model, threads) in [(&m1, "1"), (&m2, "4")] {
        let out = run(&[
            "train",
            "--threads",
            threads,
            "--data",
            csv.to_str().unwrap(),
            "--header",
            "--label-col",
            "label",
            "--scheme",
            "leverage",
            "--k",
            "1",
            "--trees",
            "6",
            "--seed",
            "3",
            "--out",
            model.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
}
