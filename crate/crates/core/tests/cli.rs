mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amgsvm::data::save_sparse;
use common::gaussian_classes;
use tempfile::TempDir;

fn amgsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amgsvm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_data(dir: &Path, name: &str, n_plus: usize, n_minus: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    save_sparse(&gaussian_classes(n_plus, n_minus, 3, 1.5, 1.0, seed), &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn without_column(path: &Path, column: &str) -> Vec<Vec<String>> {
    let (header, rows) = read_csv(path);
    let skip = header.iter().position(|h| h == column).unwrap();
    rows.into_iter()
        .map(|r| r.into_iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| v).collect())
        .collect()
}

fn kappa_line(stdout: &str, label: &str) -> String {
    stdout
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no `{label}` line in {stdout}"))
        .to_owned()
}

#[test]
fn missing_data_file_exits_with_code_2() {
    let out = amgsvm(&["train", "--data", "/nonexistent/twonorm.svm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("/nonexistent/twonorm.svm"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let out = amgsvm(&["train", "--R", "many"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("--R"));
}

#[test]
fn corrupt_model_exits_with_code_3() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 10, 10, 1);
    let model = dir.path().join("model.txt");
    fs::write(&model, "amgsvm-model 1\nc_plus banana\n").unwrap();
    let out = amgsvm(&["predict", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn train_then_predict_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 120, 180, 4);
    let out_dir = dir.path().join("run");
    let out = amgsvm(&["train", "--data", s(&data), "--seed", "7", "--stop-size", "40", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["model.txt", "levels.csv", "config.txt"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let (header, levels) = read_csv(&out_dir.join("levels.csv"));
    assert_eq!(
        header,
        ["level", "n_plus", "n_minus", "n_train", "refined", "log2Cplus", "log2Cminus", "log2gamma", "n_sv", "kappa_val", "seconds"]
    );
    assert!(levels.len() > 1);

    let preds = dir.path().join("preds.txt");
    let out = amgsvm(&["predict", "--model", s(&out_dir.join("model.txt")), "--data", s(&data), "--out", s(&preds)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let predicted: Vec<i8> = fs::read_to_string(&preds)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let labels = amgsvm::data::load_dataset(&data, amgsvm::data::Format::SparseText, None).unwrap();
    assert_eq!(predicted.len(), labels.len());
    let m = amgsvm::compute_metrics(&predicted, labels.labels()).unwrap();
    let line = kappa_line(&text(&out.stdout), "test");
    assert!(line.contains(&format!("kappa={:.4}", m.kappa)), "{line}");
    assert!(m.acc > 0.8);
}

#[test]
fn unlabeled_data_gives_predictions_only() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 40, 60, 8);
    let out_dir = dir.path().join("run");
    let out = amgsvm(&["train", "--data", s(&data), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let unlabeled = dir.path().join("u.svm");
    fs::write(&unlabeled, "1:0.5 2:0.1 3:-0.2\n1:1.5\n").unwrap();
    let out = amgsvm(&["predict", "--model", s(&out_dir.join("model.txt")), "--data", s(&unlabeled)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().all(|l| l == "+1" || l == "-1"));
    assert!(!text(&out.stderr).contains("kappa"));
}

#[test]
fn predict_rejects_wider_data() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 20, 30, 2);
    let out_dir = dir.path().join("run");
    assert!(amgsvm(&["train", "--data", s(&data), "--out", s(&out_dir)]).status.success());
    let wide = dir.path().join("w.svm");
    fs::write(&wide, "+1 1:0.5 7:1.0\n").unwrap();
    let out = amgsvm(&["predict", "--model", s(&out_dir.join("model.txt")), "--data", s(&wide)]);
    assert!(!out.status.success());
}

#[test]
fn flat_mode_matches_collapsed_multilevel() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 150, 250, 5);
    let flat = amgsvm(&["train", "--data", s(&data), "--mode", "flat", "--seed", "3", "--out", s(&dir.path().join("f"))]);
    let ml = amgsvm(&[
        "train",
        "--data",
        s(&data),
        "--mode",
        "multilevel",
        "--seed",
        "3",
        "--stop-size",
        "400",
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert!(flat.status.success() && ml.status.success());
    assert_eq!(kappa_line(&text(&flat.stdout), "validation"), kappa_line(&text(&ml.stdout), "validation"));
    assert_eq!(
        fs::read_to_string(dir.path().join("f/model.txt")).unwrap(),
        fs::read_to_string(dir.path().join("m/model.txt")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), "d.svm", 30, 50, 6);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# settings\nseed = 5\nR = 3\nfolds = 4\nstop-size = 30\n").unwrap();
    let out_dir = dir.path().join("run");
    let out = amgsvm(&["train", "--config", s(&cfg), "--data", s(&data), "--seed", "9", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let prov = fs::read_to_string(out_dir.join("config.txt")).unwrap();
    let has = |kv: &str| prov.lines().any(|l| l == kv);
    assert!(has("seed = 9"), "{prov}");
    assert!(has("R = 3"), "{prov}");
    assert!(has("folds = 4"), "{prov}");
    assert!(has("stop-size = 30"), "{prov}");
    assert!(has("eta = 2"), "{prov}");
}

#[test]
fn benchmark_is_reproducible_and_counts_rows() {
    let dir = TempDir::new().unwrap();
    write_data(dir.path(), "a.svm", 60, 140, 10);
    write_data(dir.path(), "b.svm", 90, 110, 11);
    let list = dir.path().join("list.txt");
    fs::write(&list, "a a.svm\nb b.svm\n").unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = amgsvm(&[
            "benchmark",
            "--data",
            s(&list),
            "--reps",
            "2",
            "--mode",
            "both",
            "--stop-size",
            "30",
            "--seed",
            "4",
            "--out",
            s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        out_dir
    };
    let (x, y) = (run("x"), run("y"));
    assert_eq!(
        without_column(&x.join("raw.csv"), "train_seconds"),
        without_column(&y.join("raw.csv"), "train_seconds")
    );
    assert_eq!(
        without_column(&x.join("aggregate.csv"), "train_seconds"),
        without_column(&y.join("aggregate.csv"), "train_seconds")
    );

    let (header, raw) = read_csv(&x.join("raw.csv"));
    assert_eq!(raw.len(), 8);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let seeds: Vec<&str> = raw.iter().map(|r| r[col("seed")].as_str()).collect();
    assert_eq!(seeds, ["4", "4", "5", "5", "4", "4", "5", "5"]);
    assert!(raw.iter().all(|r| r[col("status")] == "ok"));

    let (aheader, agg) = read_csv(&x.join("aggregate.csv"));
    assert_eq!(agg.len(), 4);
    let acol = |name: &str| aheader.iter().position(|h| h == name).unwrap();
    for a in &agg {
        let ks: Vec<f64> = raw
            .iter()
            .filter(|r| r[col("dataset")] == a[acol("dataset")] && r[col("mode")] == a[acol("mode")])
            .map(|r| r[col("kappa")].parse().unwrap())
            .collect();
        assert_eq!(ks.len(), 2);
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        assert_eq!(a[acol("kappa")].parse::<f64>().unwrap(), mean);
    }
}

#[test]
fn sweep_gives_one_row_per_dataset_and_r() {
    let dir = TempDir::new().unwrap();
    write_data(dir.path(), "a.svm", 60, 140, 12);
    let list = dir.path().join("list.txt");
    fs::write(&list, "a a.svm\n").unwrap();
    let out_dir = dir.path().join("sweep");
    let out = amgsvm(&[
        "benchmark",
        "--data",
        s(&list),
        "--reps",
        "1",
        "--stop-size",
        "30",
        "--sweep-R",
        "1,2,4",
        "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let (header, agg) = read_csv(&out_dir.join("aggregate.csv"));
    let r = header.iter().position(|h| h == "R").unwrap();
    let rs: Vec<&str> = agg.iter().map(|row| row[r].as_str()).collect();
    assert_eq!(rs, ["1", "2", "4"]);
}

#[test]
fn failing_dataset_is_recorded_and_run_continues() {
    let dir = TempDir::new().unwrap();
    write_data(dir.path(), "a.svm", 40, 60, 13);
    let list = dir.path().join("list.txt");
    fs::write(&list, "gone missing.svm\na a.svm\n").unwrap();
    let out_dir = dir.path().join("b");
    let out = amgsvm(&["benchmark", "--data", s(&list), "--reps", "1", "--mode", "multilevel", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let (header, raw) = read_csv(&out_dir.join("raw.csv"));
    let st = header.iter().position(|h| h == "status").unwrap();
    assert_eq!(raw.len(), 2);
    assert_ne!(raw[0][st], "ok");
    assert_eq!(raw[1][st], "ok");
}

#[test]
fn csv_training_matches_sparse_training() {
    let dir = TempDir::new().unwrap();
    let ds = gaussian_classes(30, 90, 3, 1.5, 1.0, 9);
    let sparse = dir.path().join("d.svm");
    save_sparse(&ds, &sparse).unwrap();
    let mut last = String::from("x1,x2,x3,class\n");
    let mut first = String::new();
    for (i, row) in ds.rows().enumerate() {
        let label = if ds.label(i) > 0 { "pos" } else { "neg" };
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        last.push_str(&format!("{},{label}\n", vals.join(",")));
        first.push_str(&format!("{label},{}\n", vals.join(",")));
    }
    let last_csv = dir.path().join("last.csv");
    let first_csv = dir.path().join("first.csv");
    fs::write(&last_csv, last).unwrap();
    fs::write(&first_csv, first).unwrap();

    let run = |data: &Path, extra: &[&str], out: &str| {
        let out_dir = dir.path().join(out);
        let mut args = vec!["train", "--data", s(data), "--seed", "2", "--out", s(&out_dir)];
        args.extend_from_slice(extra);
        let o = amgsvm(&args);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        (kappa_line(&text(&o.stdout), "validation"), out_dir)
    };
    let (want, _) = run(&sparse, &[], "sparse");
    let (got, model_dir) = run(&last_csv, &["--format", "csv"], "last");
    assert_eq!(got, want);
    let (got, _) = run(&first_csv, &["--format", "csv", "--label-column", "0"], "first");
    assert_eq!(got, want);

    let model = model_dir.join("model.txt");
    let o = amgsvm(&["predict", "--model", s(&model), "--data", s(&last_csv), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(text(&o.stdout).lines().count(), 120);
    assert!(text(&o.stderr).starts_with("test: "));
}
