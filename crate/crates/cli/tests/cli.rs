use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arrayopt_core::geometry::{min_pairwise_distance, Aperture, Element, ElementLayout};
use arrayopt_core::geometry_optimizer::percent_change;
use arrayopt_core::layout_file::{read_layout_file, write_layout_file};
use serde_json::Value;

fn arrayopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrayopt"))
        .args(args)
        .env_remove("ARRAYOPT_WORKERS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = arrayopt(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    arrayopt(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_data(dir: &Path, name: &str, n: usize, seed: u64, workers: &str) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "gen-data",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        p(&out),
        "--width",
        "6",
        "--grid-samples",
        "65",
        "--workers",
        workers,
        "--deterministic",
    ]);
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_data_writes_header_and_rows_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_data(dir.path(), "a.jsonl", 100, 7, "2");
    let b = small_data(dir.path(), "b.jsonl", 100, 7, "2");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    assert_eq!(code(&["gen-data", "--n", "0", "--out", p(&out)]), 2);
    assert_eq!(code(&["gen-data", "--n", "5", "--out", p(&out), "--bogus"]), 2);
    assert_eq!(
        code(&["gen-data", "--n", "5", "--out", p(&out), "--period-min", "2", "--period-max", "1"]),
        2
    );
    let nested = dir.path().join("missing/d.jsonl");
    assert_eq!(code(&["gen-data", "--n", "5", "--out", p(&nested)]), 2);
    let model = dir.path().join("m.nnw");
    assert_eq!(
        code(&["train", "--arch", "fnn", "--data", p(&dir.path().join("none.jsonl")), "--out-model", p(&model)]),
        2
    );
    assert_eq!(code(&["train", "--arch", "cnn", "--data", p(&out), "--out-model", p(&model)]), 2);
    assert_eq!(code(&["evaluate", "--layout", p(&dir.path().join("none.json"))]), 2);
    assert_eq!(code(&[]), 2);
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.jsonl");
    fs::write(&junk, "not json\n").unwrap();
    let model = dir.path().join("m.nnw");
    assert_eq!(code(&["train", "--arch", "fnn", "--data", p(&junk), "--out-model", p(&model)]), 1);

    let data = small_data(dir.path(), "d.jsonl", 20, 1, "1");
    let out = arrayopt(&[
        "train", "--arch", "fnn", "--data", p(&data), "--out-model", p(&model), "--lr", "1e200", "--epochs", "20",
        "--val-fraction", "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("diverged at epoch"), "{stderr}");
}

#[test]
fn train_memorizes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path(), "d.jsonl", 10, 2, "1");
    let run = |name: &str| {
        let model = dir.path().join(name);
        ok(&[
            "train", "--arch", "fnn", "--data", p(&data), "--out-model", p(&model), "--epochs", "300", "--lr", "1e-3",
            "--batch-size", "10", "--val-fraction", "0", "--seed", "3", "--deterministic",
        ]);
        model
    };
    let a = run("a.nnw");
    let b = run("b.nnw");
    let metrics = read_json(&dir.path().join("a.nnw.metrics.json"));
    let loss = metrics["final_train_loss"].as_f64().unwrap();
    assert!(loss < 1e-3, "final loss {loss}");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.nnw.json")).unwrap(),
        fs::read(dir.path().join("b.nnw.json")).unwrap()
    );
    let csv = fs::read_to_string(dir.path().join("a.nnw.loss.csv")).unwrap();
    assert_eq!(csv.lines().count(), 301);
}

fn trained_fnn(dir: &Path, data: &Path) -> PathBuf {
    let model = dir.join("fnn.nnw");
    ok(&[
        "train", "--arch", "fnn", "--data", p(data), "--out-model", p(&model), "--epochs", "20", "--lr", "1e-3",
        "--batch-size", "16",
    ]);
    model
}

#[test]
fn optimize_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path(), "d.jsonl", 60, 4, "4");
    let model = trained_fnn(dir.path(), &data);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "optimize", "--model", p(&model), "--data", p(&data), "--top-k", "5", "--iterations", "40", "--out-dir",
            p(&out),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        out
    };

    let hard = run("hard", &["--mode", "hard", "--theta", "0.5"]);
    let summary = fs::read_to_string(hard.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (before, after, pct): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!((percent_change(before, after).unwrap() - pct).abs() <= 0.01);
        let record = read_json(&hard.join(format!("run_{}.json", f[0])));
        assert_eq!(record["cost_before"].as_f64().unwrap(), before);
        assert_eq!(record["cost_after"].as_f64().unwrap(), after);
        assert_eq!(record["pct_change"].as_f64().unwrap(), pct);
        let (layout, _) = read_layout_file(&hard.join(format!("layout_{}.json", f[0]))).unwrap();
        assert!(min_pairwise_distance(&layout).unwrap() >= 0.5);
    }

    let implicit = run("pen_default", &["--mode", "penalty"]);
    let explicit = run("pen_explicit", &["--mode", "penalty", "--epsilon", "12.5"]);
    assert_eq!(
        fs::read(implicit.join("summary.csv")).unwrap(),
        fs::read(explicit.join("summary.csv")).unwrap()
    );
    let other = run("pen_other", &["--mode", "penalty", "--epsilon", "1000"]);
    let first = summary.lines().nth(1).unwrap().split(',').next().unwrap();
    let file = format!("run_{first}.json");
    assert_ne!(fs::read(implicit.join(&file)).unwrap(), fs::read(other.join(&file)).unwrap());
}

#[test]
fn optimize_rejects_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path(), "d.jsonl", 12, 5, "1");
    let model = trained_fnn(dir.path(), &data);
    let out = dir.path().join("o");
    let base = ["optimize", "--model", p(&model), "--data", p(&data), "--out-dir", p(&out)];
    assert_eq!(code(&[&base[..], &["--arch", "set-transformer"]].concat()), 2);
    assert_eq!(code(&[&base[..], &["--top-k", "13"]].concat()), 2);
    assert_eq!(code(&[&base[..], &["--epsilon", "-1"]].concat()), 2);
    fs::remove_file(dir.path().join("fnn.nnw.json")).unwrap();
    assert_eq!(code(&base), 2);
}

fn uniform_square(n: usize, d: f64) -> ElementLayout {
    let half = (n as f64 - 1.0) / 2.0;
    let mut els = Vec::new();
    for i in 0..n {
        for j in 0..n {
            els.push(Element::new((i as f64 - half) * d, (j as f64 - half) * d));
        }
    }
    let side = n as f64 * d;
    ElementLayout::new(Aperture::new(side, side).unwrap(), els).unwrap()
}

#[test]
fn evaluate_uniform_square_array() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("sq.json");
    write_layout_file(&layout, &uniform_square(32, 0.5), Default::default()).unwrap();
    let cuts = dir.path().join("cuts");
    let metrics = dir.path().join("m.json");
    ok(&["evaluate", "--layout", p(&layout), "--cuts-out", p(&cuts), "--metrics-out", p(&metrics)]);
    let m = read_json(&metrics);
    for axis in ["u_y", "u_z"] {
        let first = m["cuts"][axis]["first_sll_db"].as_f64().unwrap();
        assert!((first + 13.2).abs() <= 0.3, "{axis}: {first}");
        let csv = fs::read_to_string(cuts.join(format!("{axis}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some("u,db"));
        assert_eq!(csv.lines().count(), 257 + 1);
    }
    assert_eq!(m["n_elements"], 1024);
    assert!((m["min_distance"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn evaluate_single_element_has_flat_cut() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("one.json");
    let one = ElementLayout::new(Aperture::new(4.0, 4.0).unwrap(), vec![Element::new(0.3, -0.2)]).unwrap();
    write_layout_file(&layout, &one, Default::default()).unwrap();
    let cuts = dir.path().join("cuts");
    let metrics = dir.path().join("m.json");
    ok(&["evaluate", "--layout", p(&layout), "--cuts-out", p(&cuts), "--metrics-out", p(&metrics), "--grid-samples", "33"]);
    let m = read_json(&metrics);
    assert_eq!(m["sll_shortfall"], true);
    assert!(m["cuts"]["u_y"]["first_sll_db"].is_null());
    assert!(m["min_distance"].is_null());
    let csv = fs::read_to_string(cuts.join("u_y.csv")).unwrap();
    assert_eq!(csv.lines().count(), 34);
    for line in csv.lines().skip(1) {
        let db: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(db.abs() < 1e-9);
    }
}

#[test]
fn artifacts_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "8"), ("c", "1")] {
        let data = small_data(dir.path(), &format!("{tag}.jsonl"), 40, 9, workers);
        let model = dir.path().join(format!("{tag}.nnw"));
        ok(&[
            "train", "--arch", "fnn", "--data", p(&data), "--out-model", p(&model), "--epochs", "5", "--lr", "1e-3",
            "--deterministic", "--workers", workers,
        ]);
        let out = dir.path().join(format!("{tag}-opt"));
        let out_run = Command::new(env!("CARGO_BIN_EXE_arrayopt"))
            .args([
                "optimize", "--model", p(&model), "--data", p(&data), "--top-k", "8", "--iterations", "30",
                "--deterministic", "--out-dir", p(&out),
            ])
            .env("ARRAYOPT_WORKERS", workers)
            .output()
            .unwrap();
        assert!(out_run.status.success());
        let mut files: Vec<PathBuf> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        let mut blob = vec![fs::read(&data).unwrap(), fs::read(&model).unwrap()];
        blob.push(fs::read(dir.path().join(format!("{tag}.nnw.json"))).unwrap());
        blob.push(fs::read(dir.path().join(format!("{tag}.nnw.metrics.json"))).unwrap());
        blob.push(fs::read(dir.path().join(format!("{tag}.nnw.loss.csv"))).unwrap());
        for f in &files {
            blob.push(fs::read(f).unwrap());
        }
        digests.push((files.iter().map(|f| f.file_name().unwrap().to_owned()).collect::<Vec<_>>(), blob));
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(digests[0], digests[2]);
}
