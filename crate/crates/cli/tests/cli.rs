use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backaction-sim"))
}

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/circuits").join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn run_plus_at_quarter_pi() {
    let o = run(&["run", "--p0", "0.5", "--theta-deg", "45"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# backaction-sim "));
    assert!(text.lines().next().unwrap().contains("beta_convention=table"));
    assert_eq!(column(&text, "scheme[-]"), ["CM", "TPM"]);
    let f: Vec<f64> = column(&text, "F[1]").iter().map(|s| s.parse().unwrap()).collect();
    assert!((f[0] - 1.0).abs() < 1e-12);
    assert!((f[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn monte_carlo_output_is_byte_identical() {
    let args = ["run", "--p0", "0.75", "--theta-deg", "30", "--backend", "MONTECARLO", "--shots", "20000", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().next().unwrap().contains("seed=7"));
    let c = run(&["run", "--p0", "0.75", "--theta-deg", "30", "--backend", "MONTECARLO", "--shots", "20000", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let args = ["sweep", "--p0", "0.5", "--var", "theta", "--range", "0:45:16"];
    let one = bin().args(args).env("BACKACTION_SIM_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("BACKACTION_SIM_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(column(&stdout(&one), "theta_grid[deg]").len(), 32);
}

#[test]
fn json_output_parses() {
    let o = run(&["run", "--p0", "1", "--theta-deg", "20", "--format", "JSON"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"scheme":"TPM","state":{"p0":0.5},"process":{"theta_deg":10}}"#).unwrap();
    let out = dir.path().join("out.csv");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--theta-deg", "45", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&text, "theta[deg]"), ["45"]);
    assert_eq!(column(&text, "scheme[-]"), ["TPM"]);
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        vec!["run", "--p0", "1.5", "--theta-deg", "10"],
        vec!["run", "--p0", "0.5", "--beta-deg", "10"],
        vec!["sweep", "--var", "beta", "--grid", "3,50", "--beta-convention", "table"],
        vec!["run", "--config", "/nonexistent/run.json"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn reproduce_targets_pass() {
    for target in ["table-s1", "table-s2", "fig2", "fig3", "fig4"] {
        let o = run(&["reproduce", target]);
        assert_eq!(o.status.code(), Some(0), "{target}");
        let report = String::from_utf8_lossy(&o.stderr);
        assert!(report.contains("PASS") && !report.contains("FAIL"), "{target}: {report}");
        assert!(stdout(&o).starts_with("# backaction-sim "));
    }
}

#[test]
fn compile_module_c_is_tpm() {
    let o = run(&["compile", fixture("module_c.qc").to_str().unwrap(), "--param", "gamma=22.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert!(v["completeness_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn compile_module_b_residual() {
    let o = run(&["compile", fixture("module_b.qc").to_str().unwrap(), "--param", "beta=45"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["completeness_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn malformed_circuits_exit_two_with_location() {
    let dir = fixture("errors");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["compile", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", path.display());
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.contains("line ") && err.contains("column"), "{err}");
        n += 1;
    }
    assert!(n >= 15);
}

#[test]
fn unknown_param_override_is_rejected() {
    let o = run(&["compile", fixture("module_c.qc").to_str().unwrap(), "--param", "delta=3"]);
    assert_eq!(o.status.code(), Some(2));
}
