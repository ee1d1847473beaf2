use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;

use dysplit::datagen::InstanceFile;
use dysplit_cli::{run_experiment, ExperimentConfig, Format};

fn dysplit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dysplit")).args(args).env("RUST_LOG", "off").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn small_matcomp(trials: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
task = "matcomp_synth"
methods = ["dys", "drs", "svp", "svt"]
trials = {trials}
seed = 3
[matcomp]
n = [40]
r = [3]
p = [0.5]
[solver]
max_iter = 300
"#
    ))
    .unwrap()
}

/// Rows of a rendered CSV table as column -> value maps, skipping the version line.
fn parse_csv(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| headers.iter().zip(r.unwrap().iter()).map(|(h, v)| (h.to_owned(), v.to_owned())).collect())
        .collect()
}

#[test]
fn one_row_per_trial_plus_one_aggregate_per_method() {
    let report = run_experiment(&small_matcomp(5)).unwrap();
    let rows = parse_csv(&report.table.render(Format::Csv).unwrap());
    let trials = rows.iter().filter(|r| r["kind"] == "trial").count();
    let aggs = rows.iter().filter(|r| r["kind"] == "aggregate").count();
    assert_eq!((trials, aggs), (20, 4));
    assert_eq!(report.trials, 20);
    assert_eq!(report.exit_code(), 0);
    // the SVP and SVT step rules are tuned for large n and may stop at the cap here
    for r in rows.iter().filter(|r| r["kind"] == "trial" && ["dys", "drs"].contains(&r["method"].as_str())) {
        assert_eq!(r["status"], "converged", "{r:?}");
    }
}

#[test]
fn aggregates_are_recomputable_from_trial_rows() {
    let report = run_experiment(&small_matcomp(4)).unwrap();
    let rows = parse_csv(&report.table.render(Format::Csv).unwrap());
    let num = |r: &BTreeMap<String, String>, c: &str| r[c].parse::<f64>().unwrap();
    for agg in rows.iter().filter(|r| r["kind"] == "aggregate") {
        let group: Vec<_> = rows.iter().filter(|r| r["kind"] == "trial" && r["method"] == agg["method"]).collect();
        let errs: Vec<f64> = group.iter().map(|r| num(r, "rel_error")).collect();
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let std = (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let iters = group.iter().map(|r| num(r, "iterations")).sum::<f64>() / n;
        let rate = group.iter().map(|r| num(r, "success")).sum::<f64>() / n;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        assert!(close(num(agg, "rel_error"), mean), "{agg:?}");
        assert!(close(num(agg, "rel_error_std"), std), "{agg:?}");
        assert!(close(num(agg, "iterations"), iters), "{agg:?}");
        assert!(close(num(agg, "success"), rate), "{agg:?}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"table1-desk\"\nmethods = [\"dys\", \"svp\"]\n[matcomp]\nn = [40]\nr = [3]\np = [0.5]\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for (name, seed) in [("a.csv", "7"), ("b.csv", "7"), ("c.csv", "8")] {
        let path = dir.path().join(name);
        let (code, _, err) = dysplit(&["matcomp", "--config", cfg, "--trials", "3", "--seed", seed, "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn divergence_and_config_errors_set_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("div.toml");
    std::fs::write(
        &cfg,
        "task = \"matcomp_synth\"\nmethods = [\"dys\"]\n[matcomp]\nn = [30]\nr = [2]\np = [0.5]\nlambda = 1.0\n[solver]\ngamma = 100.0\nmax_iter = 100\n",
    )
    .unwrap();
    let (code, out, _) = dysplit(&["matcomp", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    // the diverged trial is still reported
    assert!(out.lines().any(|l| l.starts_with("trial,dys") && l.ends_with(",diverged")), "{out}");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "task = \"cs_recovery\"\nmethods = [\"svt\"]\n").unwrap();
    assert_eq!(dysplit(&["cs", "--config", bad.to_str().unwrap()]).0, 1);
    assert_eq!(dysplit(&["cs", "--preset", "table1-desk"]).0, 1);
    assert_eq!(dysplit(&["matcomp", "--preset", "no-such-preset"]).0, 1);
    assert_eq!(dysplit(&["matcomp", "--format", "xml"]).0, 1);
    assert_eq!(dysplit(&["--help"]).0, 0);
}

#[test]
fn json_output_mirrors_the_table() {
    let (code, out, err) = dysplit(&["diagnose", "--format", "json", "--weak-convexity", "1"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "diagnose");
    assert_eq!(v["version"], 1);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["kind"], "threshold");
    let g0 = rows[0]["gamma"].as_f64().unwrap();
    assert_eq!(g0, dysplit::splitting::max_step_size(1.0, 1.0, 1.0).unwrap());
    for r in rows.iter().filter(|r| r["kind"] == "grid") {
        if r["gamma"].as_f64().unwrap() < g0 {
            assert!(r["lambda"].as_f64().unwrap() > 0.0);
        }
    }
}

fn write_ratings(path: &Path, lines: usize) -> BTreeSet<(u64, u64)> {
    let mut text = String::new();
    let mut pairs = BTreeSet::new();
    for k in 0..lines as u64 {
        let (u, m) = (1000 + k % 37, 5 * (k / 37) + 2);
        pairs.insert((u, m));
        text.push_str(&format!("{u}::{m}::{}::{}\n", 1 + k % 5, 978_300_000 + k));
    }
    std::fs::write(path, text).unwrap();
    pairs
}

#[test]
fn ingest_partitions_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratings.dat");
    let pairs = write_ratings(&path, 1000);
    assert_eq!(pairs.len(), 1000);
    let saved = dir.path().join("split.txt");
    let (code, out, err) =
        dysplit(&["ingest", path.to_str().unwrap(), "--seed", "4", "--save", saved.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let row = &parse_csv(&out)[0];
    assert_eq!((row["train"].as_str(), row["test"].as_str(), row["duplicates"].as_str()), ("800", "200", "0"));
    assert_eq!((row["users"].as_str(), row["items"].as_str()), ("37", "28"));

    let file = InstanceFile::read(std::io::BufReader::new(std::fs::File::open(&saved).unwrap())).unwrap();
    let train = file.observations("train").unwrap();
    let test = file.observations("test").unwrap();
    let a: BTreeSet<_> = train.indices().iter().copied().collect();
    let b: BTreeSet<_> = test.indices().iter().copied().collect();
    assert!(a.is_disjoint(&b));
    assert_eq!(a.union(&b).count(), 1000);
    assert_eq!(train.shape(), (37, 28));
}

#[test]
fn ingest_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratings.dat");
    std::fs::write(&path, "1::2::3::4\n1::3::9::4\n").unwrap();
    let (code, _, err) = dysplit(&["ingest", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("ratings.dat:2:"), "{err}");
    std::fs::write(&path, "").unwrap();
    assert_eq!(dysplit(&["ingest", path.to_str().unwrap()]).0, 1);
}

#[test]
fn ratings_task_reports_held_out_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratings.dat");
    write_ratings(&path, 1000);
    let cfg = ExperimentConfig::from_toml_str(&format!(
        "task = \"matcomp_ratings\"\nmethods = [\"dys\", \"svp\"]\n[matcomp]\nr = [2]\nratings = {:?}\n[solver]\nmax_iter = 50\n",
        path.to_str().unwrap()
    ))
    .unwrap();
    let report = run_experiment(&cfg).unwrap();
    let rows = parse_csv(&report.table.render(Format::Csv).unwrap());
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r["kind"] == "trial") {
        let rmse: f64 = r["rmse"].parse().unwrap();
        assert!(rmse.is_finite() && rmse > 0.0, "{r:?}");
        assert_eq!((r["rows"].as_str(), r["cols"].as_str()), ("37", "28"));
    }
}

#[test]
fn sparsity_sweep_reports_success_rate_per_level() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
task = "cs_recovery"
methods = ["dys", "admm", "dca"]
trials = 2
[cs]
m = [40]
n = 240
s = [2, 4]
refinement = 4
"#,
    )
    .unwrap();
    let report = run_experiment(&cfg).unwrap();
    let rows = parse_csv(&report.table.render(Format::Csv).unwrap());
    let aggs: Vec<_> = rows.iter().filter(|r| r["kind"] == "aggregate").collect();
    assert_eq!(aggs.len(), 6);
    let keys: BTreeSet<_> = aggs.iter().map(|r| (r["s"].clone(), r["method"].clone())).collect();
    assert_eq!(keys.len(), 6);
    for a in &aggs {
        let rate: f64 = a["success"].parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert_eq!(a["L"], "8");
    }
    let dca_trials = rows.iter().filter(|r| r["kind"] == "trial" && r["method"] == "dca");
    for r in dca_trials {
        assert!(!r["outer"].is_empty());
    }
}
