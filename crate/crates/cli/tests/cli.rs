use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn entrochart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrochart"))
        .args(args)
        .env_remove("ENTROCHART_SEED")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_series_scores_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    fs::write(&csv, "y\n".to_owned() + &"5\n".repeat(300)).unwrap();
    let r = report(&entrochart(&["score", path(&csv), "--all-measures"]));
    assert!(r["result"]["pae"].as_f64().unwrap() < 0.01);
    assert!(r["result"]["sample_entropy"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["result"]["flattened_length"].as_f64().unwrap(), 299.0);
    assert_eq!(r["tool"], "entrochart");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn input_errors_exit_2() {
    let out = entrochart(&["score", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = entrochart(&["score", "--base", "linear", "--dims", "300by200"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "y\n1\nabc\n3\n").unwrap();
    let out = entrochart(&["score", path(&csv)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn noise_hits_target_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let run = |out: &Path| {
        report(&entrochart(&[
            "noise", "--base", "linear", "--target", "0.4", "--seed", "11", "--out", path(out),
        ]))
    };
    let r = run(&a);
    let achieved = r["result"]["achieved"].as_f64().unwrap();
    assert!((0.39..=0.41).contains(&achieved), "{achieved}");
    assert_eq!(r["seed"], 11);
    run(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let rescored = report(&entrochart(&["score", path(&a)]));
    let pae = rescored["result"]["pae"].as_f64().unwrap();
    assert!((pae - achieved).abs() < 1e-9, "{pae} vs {achieved}");
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_entrochart"))
        .args(["noise", "--base", "cosine", "--target", "0.3", "--out"])
        .arg(dir.path().join("n.csv"))
        .env("ENTROCHART_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(report(&out)["seed"], 42);
}

#[test]
fn unreachable_target_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = entrochart(&[
        "noise", "--base", "cosine", "--target", "0.01", "--out", path(&dir.path().join("n.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable-target"));
}

#[test]
fn non_convergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = entrochart(&[
        "noise", "--base", "linear", "--target", "0.8", "--max-steps", "3", "--out",
        path(&dir.path().join("n.csv")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn shape_id_set_has_80_trials_and_regenerates() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let r = report(&entrochart(&["stimuli", "shape-id", "--seed", "5", "--out", path(&a)]));
    assert_eq!(r["result"]["trials"], 80);
    report(&entrochart(&["stimuli", "shape-id", "--seed", "5", "--out", path(&b)]));
    let ta = tree(&a.join("shape-id"));
    assert_eq!(ta.len(), 80 * 2 + 1);
    assert_eq!(ta, tree(&b.join("shape-id")));

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("shape-id/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 80);
}

#[test]
fn glance_sweep_has_72_cells() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&entrochart(&["stimuli", "glance", "--out", path(dir.path())]));
    assert_eq!(r["result"]["trials"], 72);
}

#[test]
fn diff_pair_with_negative_delta() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&entrochart(&[
        "stimuli", "diff", "--initial-pae", "0.18", "--delta", "-0.06", "--out", path(dir.path()),
    ]));
    assert_eq!(r["result"]["trials"], 1);
    assert_eq!(r["result"]["images"], 4);
}

#[test]
fn exp1_default_design_is_linear() {
    let r = report(&entrochart(&["exp1", "--seed", "1"]));
    let functions = r["result"]["functions"].as_array().unwrap();
    assert_eq!(functions.len(), 4);
    for f in functions {
        assert!(f["fit"]["r_squared"].as_f64().unwrap() >= 0.8, "{}", f["base"]);
        assert!(f["fit"]["p_value"].as_f64().unwrap() < 1e-3);
    }
}

#[test]
fn smooth_and_aspect() {
    let dir = tempfile::tempdir().unwrap();
    let noisy = dir.path().join("noisy.csv");
    report(&entrochart(&[
        "noise", "--base", "gaussian", "--target", "0.6", "--out", path(&noisy),
    ]));
    let smoothed = dir.path().join("smooth.csv");
    let r = report(&entrochart(&[
        "smooth", path(&noisy), "--target", "0.3", "--max-window", "101", "--out", path(&smoothed),
    ]));
    assert_eq!(r["result"]["reached"], true);
    assert!(smoothed.exists());

    let r = report(&entrochart(&["aspect", path(&noisy)]));
    let rows = r["result"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let paes: Vec<f64> = rows.iter().filter_map(|row| row["pae"].as_f64()).collect();
    assert!(paes.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn analyze_recovers_synthetic_effects() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut csv = String::from("pae,cond,correct\n");
    for _ in 0..5000 {
        let pae: f64 = rng.gen_range(0.0..1.0);
        let cond = if rng.gen::<bool>() { "a" } else { "b" };
        let eta = -0.5 + 2.0 * pae + if cond == "b" { -1.0 } else { 0.0 };
        let correct = rng.gen::<f64>() < 1.0 / (1.0 + (-eta).exp());
        csv.push_str(&format!("{pae},{cond},{}\n", u8::from(correct)));
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("responses.csv");
    fs::write(&file, csv).unwrap();
    let r = report(&entrochart(&[
        "analyze", path(&file), "--numeric", "pae", "--categorical", "cond", "--group-by", "cond",
        "--resamples", "500", "--seed", "3",
    ]));
    let result = &r["result"];
    assert_eq!(result["converged"], true);
    let coef = |name: &str| {
        result["coefficients"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap()["estimate"]
            .as_f64()
            .unwrap()
    };
    assert!((coef("intercept") + 0.5).abs() < 0.15);
    assert!((coef("pae") - 2.0).abs() < 0.15);
    assert!((coef("cond=b") + 1.0).abs() < 0.15);
    assert_eq!(result["wald"][0]["predictor"], "cond");
    assert!(result["wald"][0]["p"].as_f64().unwrap() < 1e-6);
    assert_eq!(result["accuracy"].as_array().unwrap().len(), 2);
}

#[test]
fn analyze_reports_separation() {
    let mut csv = String::from("x,correct\n");
    for i in 0..40 {
        csv.push_str(&format!("{i},{}\n", u8::from(i >= 20)));
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sep.csv");
    fs::write(&file, csv).unwrap();
    let out = entrochart(&["analyze", path(&file), "--numeric", "x", "--resamples", "100"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("separation"));
}
