use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semiwave::io::ITERATIONS_HEADER;

const SINE5: &str = r#"
seed = 1
[nonlinearity]
family = "sine"
params = [5.0]
[solver]
snapshots = [1]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_semiwave"));
    c.env_remove("SEMIWAVE_OUTPUT_ROOT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg(config).output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_log_manifest_and_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sine5.toml", SINE5);
    let out = run(&["solve"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("runs/sine5");
    let log = fs::read_to_string(dir.join("iterations.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some(ITERATIONS_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() <= 16, "{} rows", rows.len());
    assert!(!log.contains('\r'));
    let m = manifest(&dir);
    assert_eq!(m["status"], "converged");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["grid"]["nx"], 63);
    assert_eq!(m["grid_hash"].as_str().unwrap().len(), 64);
    assert!(m["final_e"].as_f64().unwrap() < 1e-14 * m["e0"].as_f64().unwrap());
    assert!(m["diagnostics"]["decay_bound_holds"].as_bool().unwrap());
    assert!(!dir.join("manifest.json.tmp").exists());
    let snap = fs::read_to_string(dir.join("snapshot_k0001.csv")).unwrap();
    assert!(snap.starts_with("t,x,y,f\n"));
}

#[test]
fn identical_configs_give_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.toml", SINE5);
    let b = write(tmp.path(), "b.toml", SINE5);
    assert_eq!(run(&["solve"], &a).status.code(), Some(0));
    assert_eq!(run(&["solve"], &b).status.code(), Some(0));
    let la = fs::read(tmp.path().join("runs/a/iterations.csv")).unwrap();
    let lb = fs::read(tmp.path().join("runs/b/iterations.csv")).unwrap();
    assert_eq!(la, lb);
    let sa = fs::read(tmp.path().join("runs/a/snapshot_k0001.csv")).unwrap();
    let sb = fs::read(tmp.path().join("runs/b/snapshot_k0001.csv")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn linear_method_reaches_target() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "lin.toml", "method = \"linear\"\n");
    assert_eq!(run(&["solve"], &cfg).status.code(), Some(0));
    let m = manifest(&tmp.path().join("runs/lin"));
    assert!(m["relative_deviation"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn picard_divergence_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "p.toml",
        "method = \"picard\"\n[grid]\nnx = 31\n[nonlinearity]\nfamily = \"neglogcube\"\nparams = [2.0]\n[data]\ninit = \"sine(1, 10)\"\n[solver]\nmax_iters = 30\n",
    );
    let out = run(&["solve"], &cfg);
    assert_eq!(out.status.code(), Some(3));
    let dir = tmp.path().join("runs/p");
    let m = manifest(&dir);
    assert_eq!(m["exit_code"], 3);
    assert!(m["diagnostics"]["increments"].as_array().unwrap().len() >= 10);
    let log = fs::read_to_string(dir.join("iterations.csv")).unwrap();
    assert!(log.lines().count() > 10);
}

#[test]
fn subproblem_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "method = \"linear\"\n[solver]\ncg_maxit = 2\n");
    assert_eq!(run(&["solve"], &cfg).status.code(), Some(2));
    assert_eq!(manifest(&tmp.path().join("runs/c"))["status"], "subproblem_failed");
}

#[test]
fn config_errors_exit_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("window.toml", "[grid]\nomega = [0.8, 0.2]\n"),
        ("family.toml", "[nonlinearity]\nfamily = \"cubic\"\n"),
        ("syntax.toml", "[grid\nnx = 3\n"),
        ("short.toml", "[grid]\nT = 0.5\nomega = [0.4, 0.6]\n"),
        ("file.toml", "[data]\ninit = \"file:missing.csv\"\n"),
    ] {
        let cfg = write(tmp.path(), name, text);
        for cmd in ["check", "solve"] {
            let out = run(&[cmd], &cfg);
            assert_eq!(out.status.code(), Some(4), "{cmd} {name}");
            assert!(!out.stderr.is_empty());
        }
    }
    let out = bin().args(["solve", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_does_not_write() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ok.toml", SINE5);
    let out = run(&["check"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nt = 178"));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn node_files_are_read_relative_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("data")).unwrap();
    let rows: String = (1..=15)
        .map(|i| format!("{},0\n", (std::f64::consts::PI * i as f64 / 16.0).sin()))
        .collect();
    write(&tmp.path().join("data"), "u0.csv", &format!("position,velocity\n{rows}"));
    let by_file = write(
        tmp.path(),
        "f.toml",
        "method = \"linear\"\n[grid]\nnx = 15\n[data]\ninit = \"file:data/u0.csv\"\n",
    );
    let named = write(tmp.path(), "n.toml", "method = \"linear\"\n[grid]\nnx = 15\n");
    assert_eq!(run(&["solve"], &by_file).status.code(), Some(0));
    assert_eq!(run(&["solve"], &named).status.code(), Some(0));
    let a = fs::read(tmp.path().join("runs/f/iterations.csv")).unwrap();
    let b = fs::read(tmp.path().join("runs/n/iterations.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn output_root_override() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "lin.toml", "method = \"linear\"\n[grid]\nnx = 15\n");
    let out = bin()
        .env("SEMIWAVE_OUTPUT_ROOT", root.path())
        .args(["solve"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(root.path().join("runs/lin/manifest.json").exists());
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn sweep_rows_are_ordered_and_match_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sw.toml",
        "method = \"linear\"\n[nonlinearity]\nfamily = \"linear\"\nparams = [1.0]\n[sweep]\n\"grid.nx\" = [15, 31]\n\"nonlinearity.params.0\" = [1.0, -2.0]\n",
    );
    let out = run(&["sweep"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(tmp.path().join("runs/sw/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "run,grid.nx,nonlinearity.params.0,method,status,exit_code,iterations,final_E,final_deviation"
    );
    assert_eq!(lines.len(), 5);
    let keys: Vec<(&str, &str)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1], f[2])
        })
        .collect();
    assert_eq!(keys, vec![("15", "1e0"), ("15", "-2e0"), ("31", "1e0"), ("31", "-2e0")]);

    // point 1 against a plain run of the same settings
    let single = write(
        tmp.path(),
        "one.toml",
        "method = \"linear\"\n[grid]\nnx = 15\n[nonlinearity]\nfamily = \"linear\"\nparams = [-2.0]\n",
    );
    assert_eq!(run(&["solve"], &single).status.code(), Some(0));
    assert_eq!(
        fs::read(tmp.path().join("runs/sw/run_0001/iterations.csv")).unwrap(),
        fs::read(tmp.path().join("runs/one/iterations.csv")).unwrap()
    );

    // the summary itself is deterministic
    assert_eq!(run(&["sweep"], &cfg).status.code(), Some(0));
    assert_eq!(fs::read_to_string(tmp.path().join("runs/sw/summary.csv")).unwrap(), summary);
}

#[test]
fn sweep_reports_the_worst_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sw.toml",
        "method = \"linear\"\n[grid]\nnx = 15\n[sweep]\n\"grid.T\" = [2.5, 0.5]\n\"grid.omega\" = [[0.4, 0.6]]\n",
    );
    let out = run(&["sweep"], &cfg);
    assert_eq!(out.status.code(), Some(4));
    let summary = fs::read_to_string(tmp.path().join("runs/sw/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",converged,0,"));
    assert!(summary.lines().nth(2).unwrap().contains(",invalid,4,"));
}

#[test]
fn probe_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "pr.toml",
        "seed = 3\n[grid]\nnx = 15\n[nonlinearity]\nfamily = \"sine\"\nparams = [0.1]\n[probe]\ntrials = 3\namplitudes = [0.1, 0.2]\n",
    );
    let out = run(&["probe-contraction"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("runs/pr");
    let probe = fs::read_to_string(dir.join("probe.csv")).unwrap();
    assert_eq!(probe.lines().count(), 1 + 6);
    let summary = fs::read_to_string(dir.join("probe_summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("amplitude,rho_max,gap_slope,gap_r2"));
    assert_eq!(summary.lines().count(), 3);
}
