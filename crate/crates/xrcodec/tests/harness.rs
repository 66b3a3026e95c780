use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use xrcodec::config::{Algorithm, ExperimentConfig, RingName};
use xrcodec::experiment::METRICS;
use xrcodec::{emit_outputs, execute, execute_plan, mean_ci95, run_experiment};

/// Small networks and short episodes so a run takes well under a second.
fn tiny(algorithm: Algorithm, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        ring: RingName::Mid,
        seeds: vec![4, 9],
        episodes: 12,
        eval_episodes: 3,
        windows_per_episode: 5,
        agent_hidden: 8,
        mixer_embed: 4,
        hyper_hidden: 8,
        batch_size: 4,
        out_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn files_below(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn csv_headers_match_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&tiny(Algorithm::Oqmix, dir.path())).unwrap();
    let root = dir.path();
    assert_eq!(
        first_line(&root.join("runs.csv")),
        "algorithm,ring,seed,train_episodes,env_steps,eval_episodes,eval_windows,success_rate,reward,xqi,\
         delay_ms,jitter_ms,plr,throughput_mbps,goodput_mbps,throughput_ar_mbps,throughput_vr_mbps,\
         throughput_cg_mbps,goodput_ar_mbps,goodput_vr_mbps,goodput_cg_mbps,disabled_executions"
    );
    assert_eq!(
        first_line(&root.join("oqmix-mid-seed4/training.csv")),
        "phase,episode,env_steps,epsilon,windows,team_return,reward,success,loss,grad_norm,mean_weight,disabled_actions"
    );
    assert_eq!(
        first_line(&root.join("oqmix-mid-seed4/kpi.csv")),
        "episode,window,flow,class,rate_mbps,throughput_mbps,goodput_mbps,delay_ms,jitter_ms,pdr,xqi,\
         team_reward,buffer_occupancy,done"
    );
    let mut agg = "algorithm,ring,runs".to_string();
    for m in [
        "success_rate",
        "reward",
        "xqi",
        "delay_ms",
        "jitter_ms",
        "plr",
        "throughput_mbps",
        "goodput_mbps",
        "throughput_ar_mbps",
        "throughput_vr_mbps",
        "throughput_cg_mbps",
        "goodput_ar_mbps",
        "goodput_vr_mbps",
        "goodput_cg_mbps",
    ] {
        agg.push_str(&format!(",{m}_mean,{m}_ci95"));
    }
    assert_eq!(first_line(&root.join("aggregate.csv")), agg);

    // Every data row has as many fields as the header.
    for file in ["runs.csv", "aggregate.csv", "oqmix-mid-seed4/training.csv", "oqmix-mid-seed4/kpi.csv"] {
        let mut r = csv::Reader::from_path(root.join(file)).unwrap();
        let width = r.headers().unwrap().len();
        for rec in r.records() {
            assert_eq!(rec.unwrap().len(), width, "{file}");
        }
    }
}

#[test]
fn same_config_and_seed_give_byte_identical_outputs() {
    for algorithm in [Algorithm::Qmix, Algorithm::Aps] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&tiny(algorithm, a.path())).unwrap();
        run_experiment(&tiny(algorithm, b.path())).unwrap();
        let mut fa = files_below(a.path());
        let mut fb = files_below(b.path());
        assert!(fa.remove(Path::new("metadata.json")).is_some());
        assert!(fb.remove(Path::new("metadata.json")).is_some());
        assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
        for (name, bytes) in &fa {
            assert!(bytes == &fb[name], "{algorithm}: {} differs", name.display());
        }
    }
}

#[test]
fn different_seeds_give_different_runs() {
    let cfg = tiny(Algorithm::Oqmix, Path::new("unused"));
    let runs = execute(&cfg).unwrap();
    assert_ne!(runs[0].kpi, runs[1].kpi);
}

#[test]
fn aps_run_has_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithm: Algorithm::Aps,
        seeds: vec![0],
        episodes: 10,
        out_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].checkpoint.is_none());
    assert_eq!(records[0].summary.eval_episodes, 10);
    let files = files_below(dir.path());
    assert!(files.keys().all(|p| p.extension().is_none_or(|e| e != "json") || p == Path::new("metadata.json")));
    // Single run: every plot exists and every interval has zero width.
    for plot in ["learning.svg", "qoe_vs_ring.svg", "throughput_vs_ring.svg"] {
        assert!(files.contains_key(&Path::new("plots").join(plot)), "{plot}");
    }
    let mut agg = csv::Reader::from_path(dir.path().join("aggregate.csv")).unwrap();
    let headers = agg.headers().unwrap().clone();
    let row = agg.records().next().unwrap().unwrap();
    for (h, v) in headers.iter().zip(row.iter()) {
        if h.ends_with("_ci95") {
            assert_eq!(v, "0", "{h}");
        }
    }
}

#[test]
fn learner_runs_write_loadable_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Algorithm::Oqmix, dir.path());
    let records = run_experiment(&cfg).unwrap();
    let cp = xrcodec::Checkpoint::load(&dir.path().join("oqmix-mid-seed9/checkpoint.json")).unwrap();
    assert_eq!(Some(&cp), records[1].checkpoint.as_ref());
    // Re-evaluating the checkpoint reproduces the run's evaluation.
    let again = xrcodec::evaluate_checkpoint(&cp, cfg.eval_episodes).unwrap();
    assert_eq!(again.kpi, records[1].kpi);
}

#[test]
fn full_comparison_has_nine_keyed_rows() {
    let base = ExperimentConfig {
        seeds: vec![1],
        episodes: 3,
        eval_episodes: 1,
        windows_per_episode: 3,
        agent_hidden: 4,
        mixer_embed: 2,
        hyper_hidden: 4,
        ..ExperimentConfig::default()
    };
    let records = execute_plan(&base, &Algorithm::ALL, &RingName::ALL).unwrap();
    assert_eq!(records.len(), 9);
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&records, &base, dir.path()).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("aggregate.csv")).unwrap();
    let keys: Vec<(String, String)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[1].to_string())
        })
        .collect();
    assert_eq!(keys.len(), 9);
    let mut unique = keys.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), 9);
}

#[test]
fn ten_seed_interval_matches_hand_computation() {
    // 1..=10: mean 5.5, s² = 82.5 / 9, t(0.975, 9) = 2.262157
    let values: Vec<f64> = (1..=10).map(f64::from).collect();
    let ci = mean_ci95(&values).unwrap();
    let hand = 2.262_157 * (82.5f64 / 9.0).sqrt() / 10f64.sqrt();
    assert_eq!(ci.mean, 5.5);
    assert_eq!(ci.n, 10);
    assert!((ci.half_width - hand).abs() < 1e-5, "{} vs {hand}", ci.half_width);
}

#[test]
fn aggregate_equals_recomputation_from_per_run_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        seeds: vec![2, 3, 5],
        ..tiny(Algorithm::Aps, dir.path())
    };
    run_experiment(&cfg).unwrap();
    let mut runs = csv::Reader::from_path(dir.path().join("runs.csv")).unwrap();
    let headers = runs.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = runs.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let mut agg = csv::Reader::from_path(dir.path().join("aggregate.csv")).unwrap();
    let agg_headers = agg.headers().unwrap().clone();
    let agg_row = agg.records().next().unwrap().unwrap();
    let agg_value = |name: &str| -> f64 { agg_row[agg_headers.iter().position(|h| h == name).unwrap()].parse().unwrap() };
    assert_eq!(agg_value("runs"), 3.0);
    for m in METRICS {
        let col = headers.iter().position(|h| h == m).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
        let mean = values.iter().sum::<f64>() / 3.0;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        let half = 4.302_653 * sd / 3f64.sqrt();
        assert!((agg_value(&format!("{m}_mean")) - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{m}");
        assert!((agg_value(&format!("{m}_ci95")) - half).abs() <= 1e-5 * half.max(1.0), "{m}");
    }
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = ExperimentConfig {
        seeds: vec![0],
        episodes: 2,
        ..tiny(Algorithm::Aps, &blocker.join("out"))
    };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_xrcodec");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "episodes = 3\nlearning_rat = 0.1\n").unwrap();
    let out = Command::new(bin).args(["train", "--config"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rat"));

    let out = Command::new(bin).args(["train", "--algo", "dqn"]).output().unwrap();
    assert!(!out.status.success());

    let good = dir.path().join("good.toml");
    fs::write(&good, "episodes = 2\nwindows_per_episode = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = Command::new(bin)
        .args(["train", "--algo", "aps", "--ring", "far", "--seeds", "0,1", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("aps-far-seed1/kpi.csv").exists());

    let status = Command::new(bin).args(["eval", "--algo", "oqmix", "--out"]).arg(&out_dir).status().unwrap();
    assert!(!status.success());
}
