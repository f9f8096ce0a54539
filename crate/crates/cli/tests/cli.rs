use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn equilibria_prints_known_values() {
    let o = sit(&["equilibria"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("E* = 49428.57"), "{text}");
    assert!(text.contains("F* = 151375"), "{text}");
    assert!(text.contains("U* = 163540.6"), "{text}");
}

#[test]
fn unknown_control_is_a_usage_error() {
    let o = sit(&["--control", "bogus", "equilibria"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn invalid_parameters_exit_two_with_one_line() {
    let o = sit(&["equilibria", "--set", "delta_s=0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "beta_e = 8.0\nbeta = 3.0\n").unwrap();
    let o = sit(&["--params", cfg.to_str().unwrap(), "equilibria"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_flags_and_dump_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "control = \"ureg\"\nu_min = 2.0\nk = 40000.0\n").unwrap();
    let o = sit(&[
        "--params",
        cfg.to_str().unwrap(),
        "--u-min",
        "3",
        "simulate",
        "--dump-config",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("control = \"ureg\""), "{text}");
    assert!(text.contains("u_min = 3.0"), "{text}");
    assert!(text.contains("k = 40000.0"), "{text}");
}

#[test]
fn simulate_is_deterministic_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "simulate",
        "--t-end",
        "20",
        "--noise-sigma",
        "3",
        "--control",
        "ureg",
        "--seed",
        "9",
        "--out",
        out,
    ];
    assert!(sit(&args).status.success());
    let path = dir.path().join("trajectory.csv");
    let first = fs::read_to_string(&path).unwrap();
    assert!(first.starts_with("# sit "));
    assert!(first.contains("# seed = 9"));

    let again = sit(&args);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(sit(&forced).status.success());
    assert_eq!(fs::read_to_string(&path).unwrap(), first);

    let rows = data_lines(&path);
    assert_eq!(rows[0], "t,E,M,F,Ms,Fs,u,m_total,f_total");
    assert_eq!(rows.len(), 1 + 21);
}

#[test]
fn batch_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = sit(&[
        "batch",
        "--n-sims",
        "4",
        "--t-end",
        "100",
        "--checkpoints",
        "50,100",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("average |E|+|M|+|F|"));
    let stats = data_lines(&dir.path().join("stats.csv"));
    assert_eq!(stats[0], "day,statistic,pest_sum,sterile");
    assert_eq!(stats.len(), 1 + 2 * 3);
    assert_eq!(data_lines(&dir.path().join("runs.csv")).len(), 1 + 4);
    assert!(dir.path().join("stats.txt").exists());
}

#[test]
fn checkpoint_past_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sit(&[
        "batch",
        "--n-sims",
        "2",
        "--t-end",
        "100",
        "--checkpoints",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn heatmap_grid_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let o = sit(&[
        "heatmap",
        "--m-points",
        "10",
        "--f-points",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = data_lines(&dir.path().join("heatmap.csv"));
    assert_eq!(rows[0], "m_total,f_total,u");
    assert_eq!(rows.len(), 101);
}

#[test]
fn sweep_needs_long_horizon_and_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let short = sit(&["sweep", "--t-end", "500", "--out", out]);
    assert_eq!(short.status.code(), Some(2));

    let o = sit(&["sweep", "--u-min-values", "5,0", "--dt", "0.1", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_lines(&dir.path().join("sweep.csv")).len(), 3);
    assert!(dir.path().join("sweep_umin_5.csv").exists());
    assert!(dir.path().join("sweep_umin_0.csv").exists());
}

#[test]
fn env_rollout_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let actions = dir.path().join("actions.txt");
    fs::write(&actions, "# full throttle then off\n1\n1\n\n-1\n").unwrap();
    let out = dir.path().join("out");
    let args = [
        "env-rollout",
        "--actions",
        actions.to_str().unwrap(),
        "--episode-seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(sit(&args).status.success());
    let rows = data_lines(&out.join("rollout.csv"));
    assert_eq!(rows[0], "step,action,u,E,M,F,Ms,reward,done");
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[1].starts_with("0,,,"));
    assert!(rows[2].starts_with("1,1,500000,"));
    assert!(rows[4].starts_with("3,-1,0,"));

    fs::write(&actions, "0.5\n2\n").unwrap();
    let o = sit(&[
        "env-rollout",
        "--actions",
        actions.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--force",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
