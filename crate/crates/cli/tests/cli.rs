//! End-to-end tests of the fovloc binary: exit codes, golden configuration
//! dump, output determinism across runs and thread counts, config-file
//! precedence, and the replay report.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fovloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fovloc"))
        .args(args)
        .output()
        .expect("spawn fovloc")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn dump_config_defaults_are_the_baseline_configuration() {
    let out = fovloc(&["dump-config"]);
    assert!(out.status.success());
    let expected = "\
area_side_m=200
cell_side_m=5
sensor=fov
alpha_deg=120
mu=0.1
sigma_deg=5
rotation_time_s=24
policy=greedy
sample_rate_hz=1
speed_mps=5
heading_rate_dps=10
maxnorm_threshold=0.5
timeout_s=3600
seed=0
trials=1000
jobs=0
source=random
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = fovloc(&["simulate", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let out = fovloc(&["replay", "--log", "nowhere.csv", "--alpha", "200"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fovloc(&["simulate", "--trials", "2", "--alpha", "200"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_log_is_a_runtime_error() {
    let out = fovloc(&["replay", "--log", "does-not-exist.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn unknown_sweep_kind_is_a_usage_error() {
    let out = fovloc(&["sweep", "pressure"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = fovloc(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn per_trial_csv_is_byte_identical_across_reruns_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let base = [
        "simulate", "--trials", "40", "--seed", "11", "--area", "100",
    ];
    let run = |path: &Path, jobs: &str| {
        let mut args: Vec<&str> = base.to_vec();
        let path_str = path.to_str().unwrap();
        args.extend_from_slice(&["--jobs", jobs, "--out", path_str]);
        let out = fovloc(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    let stdout_a = run(&csv_a, "1");
    let stdout_b = run(&csv_b, "2");
    let summary = |s: &str| {
        s.lines()
            .find(|l| l.starts_with("n_trials="))
            .unwrap()
            .to_string()
    };
    assert_eq!(summary(&stdout_a), summary(&stdout_b));
    assert_eq!(
        fs::read(&csv_a).unwrap(),
        fs::read(&csv_b).unwrap(),
        "per-trial CSV differs across --jobs"
    );

    let csv_c = dir.path().join("c.csv");
    run(&csv_c, "2");
    assert_eq!(fs::read(&csv_b).unwrap(), fs::read(&csv_c).unwrap());
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nalpha_deg=140\nseed=9\ntrials=77\n").unwrap();
    let out = fovloc(&[
        "dump-config",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("alpha_deg=140\n"), "{text}");
    assert!(text.contains("seed=5\n"), "{text}");
    assert!(text.contains("trials=77\n"), "{text}");
}

#[test]
fn bad_config_file_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "warp_speed=9\n").unwrap();
    let out = fovloc(&["dump-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_reports_the_flight_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("flight.csv");
    // One front-cone hit, one front-cone miss, two uncertainty records with
    // a single z=1.
    let text = "\
t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z
0,0,0,0,100,0,1
1,0,0,0,100,0,0
2,0,0,90,100,0,1
3,0,0,90,100,0,0
";
    fs::write(&log, text).unwrap();
    let csv_out = dir.path().join("stats.csv");
    let out = fovloc(&[
        "replay",
        "--log",
        log.to_str().unwrap(),
        "--alpha",
        "120",
        "--out",
        csv_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("in_cone_total       2"), "{text}");
    assert!(text.contains("mistake_rate_hat    0.500000"), "{text}");
    assert!(text.contains("uncertainty_z1_frac 0.500000"), "{text}");
    let csv = fs::read_to_string(&csv_out).unwrap();
    assert_eq!(
        csv,
        "in_cone_total,in_cone_correct,uncertainty_total,uncertainty_z1,mistake_rate_hat,uncertainty_z1_frac\n2,1,2,1,0.5,0.5\n"
    );
}

#[test]
fn replay_rejects_malformed_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.csv");
    fs::write(
        &log,
        "t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z\n0,0,0,0,1,1,2\n",
    )
    .unwrap();
    let out = fovloc(&["replay", "--log", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn simulate_writes_trajectories_and_belief() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj");
    let belief = dir.path().join("belief.csv");
    let out = fovloc(&[
        "simulate",
        "--trials",
        "2",
        "--seed",
        "21",
        "--area",
        "100",
        "--trajectory-dir",
        traj.to_str().unwrap(),
        "--belief-out",
        belief.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let t21 = fs::read_to_string(traj.join("trial_21.csv")).unwrap();
    assert!(t21.starts_with("t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z\n"));
    assert!(traj.join("trial_22.csv").exists());
    let b = fs::read_to_string(&belief).unwrap();
    assert!(b.starts_with("row,col,weight\n"));
    assert_eq!(b.lines().count(), 1 + 20 * 20);

    // The replay pipeline accepts the simulator's trajectory output.
    let out = fovloc(&["replay", "--log", traj.join("trial_21.csv").to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn sweep_rate_emits_one_row_per_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("rates.csv");
    let out = fovloc(&[
        "sweep", "rate", "--rates", "1,2", "--trials", "3", "--seed", "5", "--area", "100",
        "--out", out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&out_csv).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("rate_hz,n_trials,mean_s,median_s,std_s,ci95_lo_s,ci95_hi_s,timeouts\n"));
}

#[test]
fn sweep_cone_emits_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("cone.csv");
    let out = fovloc(&[
        "sweep", "cone", "--alphas", "120,180", "--mus", "0.1,0.01", "--trials", "3",
        "--seed", "5", "--area", "100", "--out", out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(&out_csv).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
}
