use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_decaylab");

const SMALL: &str = r#"
[mesh]
n = 40

[law]
kind = "polynomial"
p = 3.0

[a]
x_lo = 0.1
x_hi = 0.4
amplitude = 1.0
smoothing = 0.05

[b]
x_lo = 0.5
x_hi = 0.9
admissible_fraction = 0.3
smoothing = 0.05

[initial.u0]
modes = [[1, 1.0], [2, 0.5]]

[sim]
t_end = 20.0

[ode]
beta = 1.05
"#;

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn simulate_writes_energy_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("sim");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,E_uv,E_high,diss_cum,phi,envelope,X_diag"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    assert!(row[4].is_empty() && row[5].is_empty());
    assert!(out.join("plot.gp").exists());
}

#[test]
fn verify_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("v");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let names = ["energy.csv", "decay.csv", "summary.txt", "plot.gp"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    assert_eq!(header(&out.join("decay.csv")), "t,phi,theta,theta_bound,psi");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), bytes, "{n} changed");
    }
}

#[test]
fn failing_verdict_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    // an exponent bound far steeper than the run can reach
    let o = run(
        &["verify", "--config", &cfg, "--out", tmp.path().join("f").to_str().unwrap()],
        &[
            ("DECAYLAB_VERIFY__FIT_WINDOW", "[10.0, 20.0]"),
            ("DECAYLAB_VERIFY__FIT_EXPONENT_MAX", "-50.0"),
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("f/summary.txt")).unwrap();
    assert!(summary.contains("fitted_exponent") && summary.contains("FAIL"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--config", "/definitely/missing.toml"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let o = run(&["transmogrify"], &[]);
    assert_eq!(o.status.code(), Some(2));

    // inadmissible b is reported and the decay checks stand down
    let cfg = write_config(tmp.path(), &SMALL.replace("admissible_fraction = 0.3", "admissible_fraction = 1.5"));
    let o = run(&["verify", "--config", &cfg, "--out", tmp.path().join("i").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("admissible false"), "{stdout}");
    assert!(stdout.contains("NOT-APPLICABLE"), "{stdout}");

    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[bogus]\nx = 1\n"));
    assert_eq!(run(&["simulate", "--config", &cfg], &[]).status.code(), Some(2));

    let cfg = write_config(tmp.path(), SMALL);
    let o = run(&["simulate", "--config", &cfg], &[("DECAYLAB_SIM__DT", "-1")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decay_ode_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ode");
    let o = run(
        &[
            "decay-ode", "--law", "quadratic_test", "--beta", "2", "--phi0", "1", "--t-end", "4", "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 4.0);
    assert!((last[1] - 5f64.sqrt()).abs() < 1e-9);
    assert!((last[2] - 1.0 / 5f64.sqrt()).abs() < 1e-9);
    assert!((last[3] - 1.0 / 5f64.sqrt()).abs() < 1e-9);
    assert!(fs::read_to_string(out.join("audit.txt")).unwrap().contains("concave                 true"));
}

#[test]
fn check_a2_exit_codes() {
    let ok = run(&["check-a2", "--law", "polynomial", "--p", "2", "--beta", "2"], &[]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict         PASS"));
    let bad = run(&["check-a2", "--law", "polynomial", "--p", "2", "--beta", "1.5"], &[]);
    assert_eq!(bad.status.code(), Some(1));
    let unknown = run(&["check-a2", "--law", "sinusoidal"], &[]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn sweep_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("sweep");
    let o = run(
        &[
            "sweep", "--config", &cfg, "--param", "law.p=2.0,3.0", "--param", "a.amplitude=0.5,1.0", "--workers",
            "3", "--out", out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert!(lines[0].starts_with("index,dir,law.p,a.amplitude,passed"));
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("3,point_0003,3.0,1.0,true"));
    for i in 0..4 {
        assert!(out.join(format!("point_{i:04}/summary.txt")).exists());
    }
}
