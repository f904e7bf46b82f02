use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_qce-dfrc");

const SMALL: &str = "[system]\nn_antennas = 4\nn_users = 1\nblock_len = 2\nmargin_threshold = 0.2\ngrid_step = 5.0\n";

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(EXE).args(args).current_dir(dir).output().expect("spawn cli")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn solve_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[ser]\nenabled = true\ntrials = 50\n"));
    let out = run(&["solve", &cfg, "--out-dir", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    let bp = body_lines(&o.join("beampattern.csv"));
    assert_eq!(bp[0], "theta_deg,power,power_db,desired,desired_scaled");
    assert_eq!(bp.len(), 1 + 37);
    let conv = body_lines(&o.join("convergence.csv"));
    assert!(conv[0].starts_with("m,objective,viol_c,viol_a,cert_norm,rho,inner_iters"));
    assert!(conv.len() > 1);
    assert_eq!(body_lines(&o.join("waveform.csv")).len(), 1 + 8);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    assert!(summary["mse"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["ser"]["trials"].as_u64(), Some(50));
}

#[test]
fn infinite_stop_tolerance_gives_one_row_per_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("alm.stop_tol = inf\nhomotopy.max_stages = 1\n{SMALL}"));
    let out = run(&["solve", &cfg, "--out-dir", "o"], dir.path());
    assert!(out.status.success());
    assert_eq!(body_lines(&dir.path().join("o/convergence.csv")).len(), 2);
}

#[test]
fn seed_flag_changes_and_repeats_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    for (sub, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        assert!(run(&["solve", &cfg, "--seed", seed, "--out-dir", sub], dir.path()).status.success());
    }
    let read = |s: &str| fs::read(dir.path().join(s).join("waveform.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let conv = |s: &str| fs::read(dir.path().join(s).join("convergence.csv")).unwrap();
    assert_ne!(conv("a"), conv("c"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "alm.tau = 0.5\n");
    assert_eq!(run(&["solve", &bad], dir.path()).status.code(), Some(2));
    let unknown = write(dir.path(), "u.toml", "[system]\nantennas = 3\n");
    assert_eq!(run(&["solve", &unknown], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "missing.toml"], dir.path()).status.code(), Some(2));
    let ok = write(dir.path(), "ok.toml", SMALL);
    assert_eq!(run(&["sweep", &ok], dir.path()).status.code(), Some(2));
    let empty = write(dir.path(), "e.toml", &format!("{SMALL}[sweep]\nb = []\n"));
    assert_eq!(run(&["sweep", &empty], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", &ok, "--threads", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn oracle_budget_refusal_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[oracle]\nn_seeds = 1\nbudget = 10\n"));
    assert_eq!(run(&["oracle-check", &cfg, "--out-dir", "o"], dir.path()).status.code(), Some(3));
}

#[test]
fn oracle_check_on_tiny_instances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[system]\nn_antennas = 2\nn_users = 1\nblock_len = 1\nmargin_threshold = 0.3\n[oracle]\nn_seeds = 6\n",
    );
    let out = run(&["oracle-check", &cfg, "--out-dir", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = body_lines(&dir.path().join("o/oracle.csv"));
    assert_eq!(rows.len(), 7);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/oracle_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sound"], serde_json::Value::Bool(true));
}

#[test]
fn sweep_rows_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{SMALL}[sweep]\nb = [0.1, 0.2]\nlevels = [4, 8]\nseeds = [0, 1, 2]\nsnr_db = [5.0, 10.0]\n[ser]\ntrials = 20\n"),
    );
    let out = run(&["sweep", &cfg, "--out-dir", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = body_lines(&dir.path().join("o/tradeoff.csv"));
    assert_eq!(rows.len(), 1 + 2 * 2 * 3 * 2);
    let means = body_lines(&dir.path().join("o/tradeoff_mean.csv"));
    assert_eq!(means.len(), 1 + 2 * 2 * 2);
    assert!(means[1..].iter().all(|l| l.split(',').nth(3) == Some("3")));
}

#[test]
fn ser_reads_a_solved_waveform() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[ser]\ntrials = 100\n[sweep]\nsnr_db = [0.0, 20.0]\n"));
    assert!(run(&["solve", &cfg, "--out-dir", "s"], dir.path()).status.success());
    let out = run(&["ser", &cfg, "--waveform", "s/waveform.csv", "--out-dir", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = body_lines(&dir.path().join("r/ser.csv"));
    assert_eq!(rows.len(), 3);
    let ser = |l: &str| l.split(',').nth(5).unwrap().parse::<f64>().unwrap();
    assert!(ser(&rows[2]) <= ser(&rows[1]));

    // a waveform off the alphabet is rejected
    let bad = write(dir.path(), "w.csv", "t,n,re,im\n0,0,0.1,0.1\n");
    assert_eq!(run(&["ser", &cfg, "--waveform", &bad], dir.path()).status.code(), Some(2));
}
