use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pa-giant"));
    c.env_remove("PA_GIANT_WORKERS");
    c
}

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> std::process::Output {
    let cfg = dir.join(format!("{sub}.json"));
    std::fs::write(&cfg, config).unwrap();
    bin()
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn generate_components_percolate() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("g");
    let o = run(
        d.path(),
        "generate",
        r#"{"rule": {"kind": "constant_typo"}, "n_vertices": 10}"#,
        &["--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run(
        d.path(),
        "generate",
        r#"{"rule": {"kind": "linear", "gamma": 0.2, "beta": 0.6}, "n_vertices": 2000}"#,
        &["--out", out.to_str().unwrap(), "--seed", "4"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let graph = out.join("graph.csv");
    assert!(out.join("graph.json").exists() && out.join("manifest.json").exists());
    let cfg = format!(r#"{{"graph": {:?}, "p": 0.5, "max_tv": 0.2}}"#, graph.to_str().unwrap());
    for sub in ["components", "percolate", "degree-dist"] {
        let o = run(d.path(), sub, &cfg, &["--out", d.path().join(sub).to_str().unwrap()]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let strict = format!(r#"{{"graph": {:?}, "max_tv": 0.0}}"#, graph.to_str().unwrap());
    let o = run(d.path(), "degree-dist", &strict, &["--out", d.path().join("dd").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"family": "linear", "engine": "survival", "gamma": [0.0, 0.3], "beta": [0.1, 0.5], "reps": 100}"#;
    let mut files = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let out = d.path().join(name);
        let o = run(d.path(), "phase-diagram", cfg, &["--out", out.to_str().unwrap(), "--workers", workers, "--seed", "9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(out.join("phase-diagram.csv")).unwrap());
        assert!(out.join("phase-diagram.svg").exists());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn spectral_subcommands() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        "operator",
        r#"{"rule": {"kind": "linear", "gamma": 0.1, "beta": 0.25}, "alpha": [0.5]}"#,
        &["--out", d.path().join("op").to_str().unwrap()],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(d.path().join("op/operator.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("# schema=operator/1 manifest="));
    assert!(csv.contains("exact-linear"));
    let o = run(
        d.path(),
        "criterion",
        r#"{"rules": [{"kind": "linear", "gamma": 0.0, "beta": 1.0}], "grid": {"family": "linear", "gamma": [0.5], "beta": [0.3]}}"#,
        &["--out", d.path().join("cr").to_str().unwrap()],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(d.path().join("cr/criterion.csv")).unwrap();
    assert!(csv.contains(",yes,,false,0.25,"), "{csv}");
    assert!(csv.contains(",yes,,true,,"), "{csv}");
    let o = run(
        d.path(),
        "percolation-sweep",
        r#"{"rule": {"kind": "linear", "gamma": 0.0, "beta": 1.0}, "n_vertices": 2000, "p": [0.1, 0.9], "seeds": 2}"#,
        &["--out", d.path().join("sw").to_str().unwrap()],
    );
    assert!(o.status.success());
    let o = run(
        d.path(),
        "theorem-check",
        r#"{"rule": {"kind": "linear", "gamma": 0.1, "beta": 0.05}, "n_vertices": 2000, "seeds": 2, "reps": 500, "limits": {"max_second": -1}}"#,
        &["--out", d.path().join("tc").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(d.path().join("tc/report.json").exists());
}

#[test]
fn worker_override_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(&cfg, r#"{"rules": [{"kind": "linear", "gamma": 0.3, "beta": 0.5}], "reps": 50}"#).unwrap();
    let out = d.path().join("s");
    let o = bin()
        .env("PA_GIANT_WORKERS", "2")
        .args(["survival", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["workers"], 2);
}
