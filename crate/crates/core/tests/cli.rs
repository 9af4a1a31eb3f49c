use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_padic-sssi-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("PADIC_SSSI_THREADS", "1").output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hierarchy_demo_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario": "hierarchy-demo"}"#);
    let out = dir.path().join("out");
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS indicator-bohr-gap"));
    let modulus = fs::read_to_string(out.join("modulus.csv")).unwrap();
    assert!(modulus.starts_with("sequence,K,omega\n"));
    for k in 0..=12 {
        assert!(modulus.contains(&format!("indicator,{k},1\n")));
    }
    let bohr = fs::read_to_string(out.join("bohr.csv")).unwrap();
    assert!(bohr.contains("indicator,0.5,30,10,3\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["version"], padic_sssi::VERSION);
    assert_eq!(summary["config"]["scenario"], "hierarchy-demo");
    assert_eq!(summary["config"]["tau_max"], 30);
}

#[test]
fn bad_alpha_exits_2_naming_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario": "identity-suite", "law": {"variant": "pareto", "alpha": 0.8}}"#,
    );
    let o = run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"scenario": "hierarchy-demo", "p": 4}"#, "not a prime"),
        (r#"{"scenario": "hierarchy-demo", "typo": 1}"#, "typo"),
        (r#"{"scenario": "equivalence", "hurst": -1}"#, "hurst"),
        (r#"{"scenario": "hierarchy-demo", "tau_max": 9000}"#, "tau_max"),
        (r#"{"scenario": "nope"}"#, "nope"),
    ];
    for (i, (body, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), body);
        let o = run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(needle), "{body}");
    }
    let o = run(&["run", "--config", "/nonexistent/x.json", "--scenario", "bogus"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn resource_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario": "identity-suite", "kmax": 70}"#);
    let o = run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = write_config(dir.path(), "f.json", r#"{"scenario": "field-demo", "dim": 6, "side": 40, "reach": 2}"#);
    let o = run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_check_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // so few seeds that the decay check cannot reach the pass fraction for this seed
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario": "equivalence", "kmax": 6, "horizon": 2048, "seeds": 3, "k_list": [0, 5],
            "law": {"variant": "rademacher"}}"#,
    );
    let out = dir.path().join("o");
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--check"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL modulus-decay"));
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario": "field-demo", "seed": 1, "side": 8, "kmax": 4, "reach": 4, "seeds": 200, "k_list": [0, 1, 2]}"#);
    let out = dir.path().join("o");
    let o = run(&["run", "--config", &cfg, "--seed", "77", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 77);
}

#[test]
fn simulate_and_analyze_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let o = run(&["simulate", "--horizon", "256", "--kmax", "6", "--seed", "5", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("index,value\n0,0\n"));
    assert_eq!(text.lines().count(), 257);

    let stdout = run(&["simulate", "--horizon", "256", "--kmax", "6", "--seed", "5"]).stdout;
    assert_eq!(String::from_utf8(stdout).unwrap(), text);

    let bin = dir.path().join("path.pssi");
    let o = run(&["simulate", "--horizon", "64", "--format", "bin", "--out", bin.to_str().unwrap()]);
    assert!(o.status.success());
    let dump = padic_sssi::export::read_binary(fs::File::open(&bin).unwrap()).unwrap();
    assert!(matches!(dump, padic_sssi::export::Dump::Path(p) if p.values.len() == 64));

    let report = dir.path().join("report");
    let o = run(&[
        "analyze", "--input", csv.to_str().unwrap(), "--epsilon", "0.5", "--epsilon", "5", "--tau-max", "64",
        "--out", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["length"], 256);
    assert_eq!(summary["bohr"].as_array().unwrap().len(), 2);
    assert_eq!(summary["padic_modulus"].as_array().unwrap().len(), 8);
    assert!(fs::read_to_string(report.join("weyl.csv")).unwrap().starts_with("L,value\n"));
}

#[test]
fn analyze_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "index,value\n0,1\n2,3\n").unwrap();
    let o = run(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of sequence"));
}
