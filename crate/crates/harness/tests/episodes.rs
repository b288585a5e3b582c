use std::fs::{self, File};
use std::process::Command;

use gpbatch_harness::config::{EnvironmentSpec, KernelSpec, ScheduleKind};
use gpbatch_harness::presets::{config, PresetOptions};
use gpbatch_harness::records::{read_records, read_summary, write_records, RunRecord};
use gpbatch_harness::{run_episode, run_grid, write_grid, ExperimentConfig};
use proptest::prelude::*;

fn rkhs_se() -> EnvironmentSpec {
    EnvironmentSpec::Rkhs {
        kernel: KernelSpec::Se { lengthscale: 0.2 },
        grid: 100,
        centers: 50,
        norm: 1.0,
        noise_variance: 0.025,
    }
}

fn small(policy: &str, schedule: ScheduleKind, horizon: usize, replications: usize) -> ExperimentConfig {
    let opts = PresetOptions { horizon, replications, seed: 7, ..Default::default() };
    config("x", rkhs_se(), schedule, policy, &opts)
}

#[test]
fn single_round_regret() {
    for policy in ["igp_bucb", "gp_bucb", "gp_bts"] {
        let r = run_episode(&small(policy, ScheduleKind::SimpleBatch, 1, 1), 0).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].cumulative_regret, r[0].r_t);
        assert_eq!(r[0].average_regret, r[0].r_t);
    }
}

#[test]
fn batch_size_only_matters_after_first_round() {
    let mut seq = small("igp_bucb", ScheduleKind::SimpleBatch, 30, 1);
    seq.schedule.m = Some(1);
    let batch = small("igp_bucb", ScheduleKind::SimpleBatch, 30, 1);
    let a = run_episode(&seq, 0).unwrap();
    let b = run_episode(&batch, 0).unwrap();
    assert_eq!(a[0].x_index, b[0].x_index);
    assert_eq!(a[0].y_t.to_bits(), b[0].y_t.to_bits());
    assert_ne!(a.iter().map(|r| r.x_index).collect::<Vec<_>>(), b.iter().map(|r| r.x_index).collect::<Vec<_>>());
}

#[test]
fn regret_bookkeeping() {
    for policy in ["igp_bucb", "gp_bucb", "gp_bts"] {
        for schedule in [ScheduleKind::SimpleBatch, ScheduleKind::SimpleDelay, ScheduleKind::Sequential] {
            let records = run_episode(&small(policy, schedule, 80, 1), 3).unwrap();
            let mut sum = 0.0;
            let mut prev = 0.0;
            for (i, r) in records.iter().enumerate() {
                assert_eq!(r.t, i + 1);
                assert!(r.r_t >= 0.0);
                assert!(r.cumulative_regret >= prev);
                assert!(r.average_regret.is_finite());
                sum += r.r_t;
                prev = r.cumulative_regret;
            }
            assert!((sum - records.last().unwrap().cumulative_regret).abs() <= 1e-9);
        }
    }
}

#[test]
fn suite_writes_one_file_per_function_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("igp_bucb", ScheduleKind::SimpleBatch, 20, 25);
    let results = run_grid(std::slice::from_ref(&cfg), true);
    write_grid(&results, dir.path()).unwrap();
    let sub = dir.path().join(cfg.label());
    let mut runs: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    runs.sort();
    assert_eq!(runs.len(), 25);
    assert_eq!(runs[0], "run_000.csv");
    assert_eq!(runs[24], "run_024.csv");
    assert!(dir.path().join("summary.csv").exists());
    assert!(dir.path().join("plot_regret.py").exists());

    // aggregate equals the mean over per-run files
    let all: Vec<Vec<RunRecord>> = runs.iter().map(|f| read_records(File::open(sub.join(f)).unwrap()).unwrap()).collect();
    let summary = read_summary(File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 20);
    for row in &summary {
        let mean = all.iter().map(|r| r[row.t - 1].average_regret).sum::<f64>() / 25.0;
        assert!((row.mean_avg_regret - mean).abs() <= 1e-12, "t = {}", row.t);
        assert_eq!((row.policy.as_str(), row.schedule.as_str(), row.m), ("igp_bucb", "simple_batch", 5));
    }
}

#[test]
fn cli_replay_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("gp_bts", ScheduleKind::SimpleDelay, 25, 2);
    let cfg_path = dir.path().join("exp.toml");
    fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let bin = env!("CARGO_BIN_EXE_gpbatch");
    let status = Command::new(bin)
        .args(["run", "--config", cfg_path.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let env_path = dir.path().join("env.csv");
    let status = Command::new(bin)
        .args(["gen-env", "--config", cfg_path.to_str().unwrap(), "--replication", "1", "--out", env_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let replay = Command::new(bin)
        .args(["replay", "--config", cfg_path.to_str().unwrap(), "--env", env_path.to_str().unwrap(), "--replication", "1"])
        .output()
        .unwrap();
    assert!(replay.status.success());
    let original = fs::read(dir.path().join("out").join(cfg.label()).join("run_001.csv")).unwrap();
    assert_eq!(replay.stdout, original);
}

#[test]
fn cli_mig_table() {
    let out = Command::new(env!("CARGO_BIN_EXE_gpbatch"))
        .args(["mig", "--grid", "10", "--max-t", "3", "--method", "brute-force"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,gamma,method");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn cli_rejects_unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gpbatch"))
        .args(["grid", "--preset", "nope", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

fn record_strategy() -> impl Strategy<Value = RunRecord> {
    (1usize..1000, 0usize..1000, -1e3f64..1e3, -1e3f64..1e3, 0.0f64..10.0, 0.0f64..1e4, 0.0f64..10.0, 0.0f64..1e3)
        .prop_map(|(t, x_index, f_xt, y_t, r_t, cumulative_regret, average_regret, width)| RunRecord {
            t,
            x_index,
            f_xt,
            y_t,
            r_t,
            cumulative_regret,
            average_regret,
            width,
        })
}

proptest! {
    #[test]
    fn records_round_trip(records in prop::collection::vec(record_strategy(), 0..20)) {
        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        prop_assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }
}
