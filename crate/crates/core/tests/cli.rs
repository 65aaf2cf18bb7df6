use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CIRCLE: &str = r#"
d = 2
n = 64
eps = 0.05
t_end = 0.004
hook_every = 4

[shape]
kind = "sphere"
center = [0.5, 0.5]
radius = 0.25
"#;

fn pfmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfmc")).args(args).output().expect("spawn pfmc")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn empty_span_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CIRCLE.replace("t_end = 0.004", "t_end = 0.0"));
    let out_dir = dir.path().join("out");
    let o = pfmc(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out_dir.join("diag.csv")).unwrap();
    assert_eq!(text.trim(), "t,mu_total,xi_max,xi_l1,D_t,dissipation,f_l2,w_max,interface_radius,phi_margin");
}

#[test]
fn circle_radius_column_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CIRCLE);
    let out_dir = dir.path().join("out");
    let o = pfmc(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let radii = column(&fs::read_to_string(out_dir.join("diag.csv")).unwrap(), "interface_radius");
    assert!(radii.len() > 3);
    assert!(radii.windows(2).all(|w| w[1] < w[0]), "{radii:?}");
}

#[test]
fn malformed_key_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CIRCLE}\n[forcing]\nampltude = 1.0\n"));
    let o = pfmc(&["run", "--config", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("reason=config"), "{err}");
    assert!(err.contains("forcing"), "{err}");
}

#[test]
fn missing_config_is_io_error() {
    let o = pfmc(&["run", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reason=io"));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), CIRCLE);
    let o = pfmc(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("xi_nonpositive PASS"));
    assert!(stdout.contains("energy PASS"));
    assert!(out_dir.join("verify.csv").exists());

    let cfg = write_config(dir.path(), &format!("{CIRCLE}\n[init]\nsteepness = 2.0\n"));
    let o = pfmc(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("xi_nonpositive FAIL"));
    assert!(stdout.contains("verify FAIL"));
}

#[test]
fn sweep_single_eps_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), &CIRCLE.replace("t_end = 0.004", "t_end = 0.002"));
    let o = pfmc(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--eps", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no trend"));
    let text = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("eps,n,dt,l,t,xi_l1,l_term"));
}

#[test]
fn oracle_prints_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CIRCLE);
    let o = pfmc(&["oracle", "--config", &cfg]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success());
    assert!(stdout.contains("sigma = 1.333333333333"), "{stdout}");
    assert!(stdout.contains("sphere radius at t = 0.004"), "{stdout}");
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CIRCLE}\n[forcing]\npreset = \"shear\"\namplitude = 0.3\ng = 0.1\n"));
    let mut texts = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("out{k}"));
        let o = pfmc(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--workers", "3", "--seed", "7"]);
        assert!(o.status.success());
        texts.push(fs::read(out_dir.join("diag.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            pfmc_core::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
