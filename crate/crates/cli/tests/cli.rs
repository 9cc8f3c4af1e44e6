use std::path::Path;
use std::process::{Command, Output};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/configs/golden.json");

fn treeharm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeharm")).args(args).env_remove("TREEHARM_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn phi_table_rows() {
    let o = treeharm(&["phi", "--z", "0", "--n-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4, "{text}");
    let last: Vec<f64> = rows[3].split(',').map(|t| t.parse().unwrap()).collect();
    assert!((last[1] - 5.0 / 6.0).abs() < 1e-12);

    let o = treeharm(&["phi", "--z", "0,-0.5", "--n-max", "5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for row in v.as_array().unwrap() {
        assert!((row["re"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn extrema_reports() {
    let o = treeharm(&["extrema", "--symbol", "laplacian", "--p", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["max_mod"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let o = treeharm(&["extrema", "--symbol", "heat:1,0", "--p", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // for real xi at p = 1 the maximum of |exp(xi gamma)| is exp(2 xi)
    assert!((v["max_mod"].as_f64().unwrap() - 2f64.exp()).abs() < 1e-9);

    let o = treeharm(&["extrema", "--symbol", "cube"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_and_symbols() {
    let o = treeharm(&["kernel", "--symbol", "sphere:2", "--support", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    let o = treeharm(&["symbols", "--symbol", "laplacian", "--grid", "16", "--plot-data"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,y"));
    assert_eq!(text.lines().count(), 17);
}

fn write_profile(dir: &Path, values: &[(f64, f64)]) -> std::path::PathBuf {
    let path = dir.join("f.csv");
    let mut text = String::from("index,re,im\n");
    for (i, (re, im)) in values.iter().enumerate() {
        text.push_str(&format!("{i},{re},{im}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn decompose_planted_mixture() {
    // 2 phi at z1 = 0.4 + 0.2i plus 3 phi at z2 = 1.3 - 0.1i for q = 2
    let dir = tempfile::tempdir().unwrap();
    let phi = |z: (f64, f64)| {
        let o = treeharm(&["phi", "--z", &format!("{},{}", z.0, z.1), "--n-max", "12", "--format", "json"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_array().unwrap().iter().map(|r| (r["re"].as_f64().unwrap(), r["im"].as_f64().unwrap())).collect::<Vec<_>>()
    };
    let (a, b) = (phi((0.4, 0.2)), phi((1.3, -0.1)));
    let values: Vec<(f64, f64)> = a.iter().zip(&b).map(|(x, y)| (2.0 * x.0 + 3.0 * y.0, 2.0 * x.1 + 3.0 * y.1)).collect();
    let input = write_profile(dir.path(), &values);
    // gamma(z) = 1 - phi_z(1)
    let gamma = |p: &[(f64, f64)]| format!("{},{}", 1.0 - p[1].0, -p[1].1);
    let o = treeharm(&[
        "decompose",
        "--input",
        input.to_str().unwrap(),
        "--symbol",
        "laplacian",
        "--a",
        &gamma(&a),
        "--a",
        &gamma(&b),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let roots = v["root_values"].as_array().unwrap();
    assert!((roots[0][0].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((roots[1][0].as_f64().unwrap() - 3.0).abs() < 1e-8);

    let dup = treeharm(&["decompose", "--input", input.to_str().unwrap(), "--symbol", "laplacian", "--a", "0.5", "--a", "0.5"]);
    assert_eq!(dup.status.code(), Some(2));
    assert!(stderr(&dup).contains("distinct"));
    let zero = treeharm(&["decompose", "--input", input.to_str().unwrap(), "--symbol", "laplacian", "--a", "0.5", "--order", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn norms_of_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_profile(dir.path(), &[(1.0, 0.0), (0.5, 0.0), (0.25, 0.0)]);
    let o = treeharm(&["norms", "--input", input.to_str().unwrap(), "--kind", "lp", "--p", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // 1 + 3 * 0.5 + 6 * 0.25
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    let missing = treeharm(&["norms", "--input", "/nonexistent.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("input"));
}

#[test]
fn golden_run_is_consistent_and_independent_of_jobs() {
    let (d1, d4) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o1 = treeharm(&["strichartz", GOLDEN, "--out", d1.path().to_str().unwrap(), "--jobs", "1", "--plot-data"]);
    let o4 = treeharm(&["strichartz", GOLDEN, "--out", d4.path().to_str().unwrap(), "--jobs", "4", "--plot-data"]);
    assert_eq!(o1.status.code(), Some(0), "{}", stderr(&o1));
    assert_eq!(o4.status.code(), Some(0));
    assert_eq!(o1.stdout, o4.stdout);
    let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8 * 3 + 1);
    for name in names {
        let a = std::fs::read(d1.path().join(&name)).unwrap();
        let b = std::fs::read(d4.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_treeharm"))
            .args(["strichartz", GOLDEN, "--out", dir.path().to_str().unwrap()])
            .env("TREEHARM_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("laplacian-p1.5-max-contaminated.json")).unwrap()).unwrap();
        (v["seed"].as_u64().unwrap(), v["modes"].clone())
    };
    let (s1, m1) = run("17");
    let (s2, m2) = run("18");
    assert_eq!((s1, s2), (17, 18));
    assert_ne!(m1, m2);
    assert_eq!(run("17").1, m1);
    let o = Command::new(env!("CARGO_BIN_EXE_treeharm")).args(["phi", "--z", "1"]).env("TREEHARM_SEED", "seven").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("TREEHARM_SEED"));
}

#[test]
fn mismatched_expectation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"scenarios": [{"name": "wrong", "p": 1.5, "multiplier": {"kind": "laplacian"}, "regime": "above_max",
            "a": {"mode": "max_times", "factor": 1.1}, "direction": "bi_infinite",
            "planted": [{"at": {"alpha_over_tau": 0.5}}], "expect": "consistent"}],
            "output_dir": "unused"}"#,
    )
    .unwrap();
    let o = treeharm(&["strichartz", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["verdict"], "hypothesis-violated");
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"depth": 12}"#).unwrap();
    let o = treeharm(&["--config", cfg.to_str().unwrap(), "phi", "--z", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("depth"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"scenarios": [{"name": "x", "p": 1.5, "k": 1, "multiplier": {"kind": "laplacian"},
        "regime": "max", "a": {"mode": "max_times", "factor": 1}, "direction": "backward"}]}"#)
    .unwrap();
    let o = treeharm(&["strichartz", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k:"), "{}", stderr(&o));

    let o = treeharm(&["strichartz", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = treeharm(&["phi", "--z", "1", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn defaults_round_trip() {
    let o = treeharm(&["--print-defaults"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["q"], 2);
    assert_eq!(v["tolerances"]["extrema_grid"], 4096);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("defaults.json");
    std::fs::write(&cfg, &o.stdout).unwrap();
    let o = treeharm(&["--config", cfg.to_str().unwrap(), "phi", "--z", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 16);
}
