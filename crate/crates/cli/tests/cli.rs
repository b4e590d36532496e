use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn trawl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trawl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn experiments() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EXP: &str = r#"{"family":"exponential","rate":1}"#;
const POISSON: &str = r#"{"family":"poisson","rate":1}"#;

fn simulate(out: &Path, n: &str, seed: &str) -> Output {
    trawl(&[
        "simulate",
        "--trawl",
        EXP,
        "--basis",
        POISSON,
        "--n",
        n,
        "--delta",
        "0.05",
        "--seed",
        seed,
        "--out",
        s(out),
    ])
}

#[test]
fn simulate_writes_path_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    let o = simulate(&out, "200", "3");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("t,x"));
    assert_eq!(text.lines().count(), 202);
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("path.csv.provenance.json")).unwrap()).unwrap();
    assert_eq!(side["master_seed"], 3);
    assert_eq!(side["command"], "simulate");
    assert!(side["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn simulate_rejects_one_step_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(&dir.path().join("p.csv"), "1", "0");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("at least 3"), "{}", stderr(&o));
}

#[test]
fn simulate_missing_spec_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = trawl(&[
        "simulate",
        "--trawl",
        EXP,
        "--n",
        "10",
        "--delta",
        "0.1",
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("basis"));
}

#[test]
fn simulate_is_reproducible_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.csv"),
    );
    assert_eq!(code(&simulate(&a, "500", "11")), 0);
    assert_eq!(code(&simulate(&b, "500", "11")), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let side = dir.path().join("a.csv.provenance.json");
    let o = trawl(&["--threads", "3", "simulate", "--from-sidecar", s(&side), "--out", s(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn simulate_from_spec_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"trawl":{"family":"compact_triangle","support":1},"seed":{"family":"gamma","shape":2,"scale":0.5},"n":50,"delta":0.1,"master_seed":1}"#,
    )
    .unwrap();
    let out = dir.path().join("p.csv");
    let o = trawl(&["simulate", "--spec", s(&spec), "--n", "80", "--exact", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 82);
}

#[test]
fn estimate_three_point_path() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, "0\n1\n0\n").unwrap();
    let out = dir.path().join("est");
    let o = trawl(&["estimate", "--input", s(&input), "--delta", "1", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a_hat = std::fs::read_to_string(out.join("a_hat.csv")).unwrap();
    assert_eq!(a_hat, "lag_time,a_hat\n0,0.5\n1,-0.25\n");
    let f = std::fs::read_to_string(out.join("functionals_square.csv")).unwrap();
    assert!(f.starts_with("t,psi_n,lambda_n,lambda_bar_n\n0,0,0.3125,"), "{f}");
    assert!(out.join("a_hat.csv.provenance.json").exists());
}

#[test]
fn estimate_methods_agree_to_printed_precision() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    assert_eq!(code(&simulate(&input, "3000", "4")), 0);
    let mut files = Vec::new();
    for method in ["fft", "naive"] {
        let out = dir.path().join(method);
        let o = trawl(&[
            "estimate",
            "--input",
            s(&input),
            "--method",
            method,
            "--out-dir",
            s(&out),
            "--g",
            "square",
            "--g",
            "power:4",
            "--t-grid",
            "0,0.5,1,2",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        files.push(
            ["a_hat.csv", "functionals_square.csv", "functionals_power_4.csv"]
                .map(|f| std::fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn estimate_missing_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = trawl(&["estimate", "--input", "/nonexistent/x.csv", "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn estimate_rejects_bad_test_function() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, "0\n1\n0\n").unwrap();
    let o = trawl(&[
        "estimate",
        "-i",
        s(&input),
        "--delta",
        "1",
        "--out-dir",
        s(dir.path()),
        "--g",
        "cube",
    ]);
    assert_eq!(code(&o), 2);
}

fn tdep(input: &Path, t: &str, p: &str) -> Output {
    trawl(&["tdep", "--input", s(input), "--T", t, "--p", p])
}

#[test]
fn tdep_reports_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    assert_eq!(code(&simulate(&input, "2000", "8")), 0);

    let o = tdep(&input, "1", "4");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["tau", "scaled", "T", "p"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["p_below_clt_threshold"], false);

    let o = tdep(&input, "1", "2");
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["p_below_clt_threshold"], true);

    assert_eq!(code(&tdep(&input, "1000", "4")), 2);

    let out = dir.path().join("report.json");
    let o = trawl(&["tdep", "-i", s(&input), "--horizon", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("report.json.provenance.json").exists());
}

#[test]
fn tdep_on_constant_path_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    std::fs::write(&input, "t,x\n0,2\n1,2\n2,2\n3,2\n").unwrap();
    assert_eq!(code(&tdep(&input, "1", "4")), 3);
}

#[test]
fn mc_bias_experiment_mean_nearer_twice_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiments().join("theorem3.json");
    let o = trawl(&["mc", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("theorem3_quadratic_bias.json")).unwrap())
            .unwrap();
    let mean = v["summaries"][0]["mean"].as_f64().unwrap();
    assert!((mean - 1.0).abs() < (mean - 0.5).abs(), "mean {mean}");
    let raw = std::fs::read_to_string(dir.path().join("theorem3_quadratic_bias_raw.csv")).unwrap();
    assert!(raw.starts_with("n,rep,stat"));
    assert_eq!(raw.lines().count(), 201);
}

#[test]
fn mc_replays_from_sidecar_at_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let cfg = experiments().join("corollary1_null.json");
    let o = trawl(&[
        "--threads",
        "1",
        "mc",
        s(&cfg),
        "--out-dir",
        s(&first),
        "--replications",
        "30",
        "--n-grid",
        "1024,2048",
        "--seed",
        "99",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let name = "corollary1_null_triangle";
    let side = first.join(format!("{name}.json.provenance.json"));
    for threads in ["2", "6"] {
        let again = dir.path().join(threads);
        let o = trawl(&[
            "--threads",
            threads,
            "mc",
            "--from-sidecar",
            s(&side),
            "--out-dir",
            s(&again),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        for f in [format!("{name}.json"), format!("{name}_raw.csv")] {
            assert_eq!(
                std::fs::read(first.join(&f)).unwrap(),
                std::fs::read(again.join(&f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn mc_unknown_target_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiments().join("theorem3.json");
    let o = trawl(&["mc", s(&cfg), "--out-dir", s(dir.path()), "--target", "T9"]);
    assert_eq!(code(&o), 2);
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("\"T3\"", "\"T9\"");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&trawl(&["mc", s(&bad), "--out-dir", s(dir.path())])), 2);
}

#[test]
fn kernels_grid_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sigma.csv");
    let o = trawl(&[
        "kernels",
        "--trawl",
        EXP,
        "--k4",
        "1",
        "--s-grid",
        "0,0.5,1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,r,value"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&first[..2], &[0.0, 0.0]);
    assert!((first[2] - 1.0).abs() < 1e-6);
    assert_eq!(text.lines().count(), 10);

    let f = dir.path().join("f.csv");
    let o = trawl(&[
        "kernels",
        "--trawl",
        EXP,
        "--k4",
        "1",
        "--kind",
        "f",
        "--index",
        "3,4",
        "--s-grid",
        "0.2",
        "--out",
        s(&f),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&f).unwrap(), "s,r,value\n0.2,0.2,0\n");

    let o = trawl(&[
        "kernels",
        "--trawl",
        EXP,
        "--kind",
        "sigma-a",
        "--s-grid",
        "0",
        "--out",
        s(&f),
    ]);
    assert_eq!(code(&o), 2, "k4 is required");
}
