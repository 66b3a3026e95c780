//! CSV tables, plots, checkpoints and the metadata file.
//!
//! Layout below the output directory:
//!
//! ```text
//! runs.csv                          one row per run
//! aggregate.csv                     mean and 95% CI per (algorithm, ring)
//! <algorithm>-<ring>-seed<seed>/
//!     training.csv                  one row per episode
//!     kpi.csv                       one row per flow and evaluation window
//!     checkpoint.json               learners only
//! plots/*.svg
//! metadata.json                     configuration echo, versions, timestamp
//! ```
//!
//! Everything except `metadata.json` is a pure function of the
//! configuration and the seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig, RingName};
use crate::experiment::{RunRecord, RunSummary, METRICS};
use crate::stats::{mean_ci95, MeanCi};

pub const TRAINING_HEADER: &str = "phase,episode,env_steps,epsilon,windows,team_return,reward,success,loss,grad_norm,mean_weight,disabled_actions";
pub const KPI_HEADER: &str = "episode,window,flow,class,rate_mbps,throughput_mbps,goodput_mbps,delay_ms,jitter_ms,pdr,xqi,team_reward,buffer_occupancy,done";
pub const RUNS_HEADER: &str = "algorithm,ring,seed,train_episodes,env_steps,eval_episodes,eval_windows,success_rate,reward,xqi,delay_ms,jitter_ms,plr,throughput_mbps,goodput_mbps,throughput_ar_mbps,throughput_vr_mbps,throughput_cg_mbps,goodput_ar_mbps,goodput_vr_mbps,goodput_cg_mbps,disabled_executions";

/// `algorithm,ring,runs` followed by `<metric>_mean,<metric>_ci95` pairs.
pub fn aggregate_header() -> String {
    let mut cols = vec!["algorithm".to_string(), "ring".to_string(), "runs".to_string()];
    for m in METRICS {
        cols.push(format!("{m}_mean"));
        cols.push(format!("{m}_ci95"));
    }
    cols.join(",")
}

/// Metric statistics of the runs sharing an (algorithm, ring) key.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub ring: RingName,
    pub runs: usize,
    pub metrics: Vec<MeanCi>,
}

impl AggregateRow {
    pub fn metric(&self, name: &str) -> Option<MeanCi> {
        METRICS.iter().position(|m| *m == name).map(|i| self.metrics[i])
    }
}

/// Groups runs by (algorithm, ring), ordered by key then seed.
pub fn group_runs(records: &[RunRecord]) -> BTreeMap<(Algorithm, RingName), Vec<&RunRecord>> {
    let mut groups: BTreeMap<(Algorithm, RingName), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.summary.algorithm, r.summary.ring)).or_default().push(r);
    }
    for runs in groups.values_mut() {
        runs.sort_by_key(|r| r.summary.seed);
    }
    groups
}

pub fn aggregate_summaries(summaries: &[&RunSummary]) -> Result<Vec<AggregateRow>> {
    let mut groups: BTreeMap<(Algorithm, RingName), Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups.entry((s.algorithm, s.ring)).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|((algorithm, ring), mut runs)| {
            runs.sort_by_key(|s| s.seed);
            let metrics = (0..METRICS.len())
                .map(|i| mean_ci95(&runs.iter().map(|s| s.metrics()[i]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            Ok(AggregateRow {
                algorithm,
                ring,
                runs: runs.len(),
                metrics,
            })
        })
        .collect()
}

pub fn aggregate(records: &[RunRecord]) -> Result<Vec<AggregateRow>> {
    aggregate_summaries(&records.iter().map(|r| &r.summary).collect::<Vec<_>>())
}

pub fn run_dir_name(s: &RunSummary) -> String {
    format!("{}-{}-seed{}", s.algorithm, s.ring, s.seed)
}

fn write_rows<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut sorted: Vec<&RunSummary> = records.iter().map(|r| &r.summary).collect();
    sorted.sort_by_key(|s| (s.algorithm, s.ring, s.seed));
    write_rows(path, RUNS_HEADER, &sorted)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(aggregate_header().split(','))?;
    for row in rows {
        let mut rec = vec![row.algorithm.to_string(), row.ring.to_string(), row.runs.to_string()];
        for m in &row.metrics {
            rec.push(m.mean.to_string());
            rec.push(m.half_width.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the training log, KPI stream and checkpoint of one run.
pub fn write_run(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    let run_dir = dir.join(run_dir_name(&record.summary));
    fs::create_dir_all(&run_dir).with_context(|| format!("creating {}", run_dir.display()))?;
    write_rows(&run_dir.join("training.csv"), TRAINING_HEADER, &record.episodes)?;
    write_rows(&run_dir.join("kpi.csv"), KPI_HEADER, &record.kpi)?;
    if let Some(cp) = &record.checkpoint {
        cp.save(&run_dir.join("checkpoint.json"))?;
    }
    Ok(run_dir)
}

#[derive(Serialize)]
struct Metadata<'a> {
    created_unix_s: u64,
    xrcodec_version: &'a str,
    runs: usize,
    config: &'a ExperimentConfig,
}

fn write_metadata(dir: &Path, cfg: &ExperimentConfig, runs: usize) -> Result<()> {
    let meta = Metadata {
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        xrcodec_version: env!("CARGO_PKG_VERSION"),
        runs,
        config: cfg,
    };
    let path = dir.join("metadata.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)?).with_context(|| format!("writing {}", path.display()))
}

/// Writes every artifact of `records` below `dir`.
pub fn emit_outputs(records: &[RunRecord], cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    ensure!(!records.is_empty(), "no runs to write");
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    for r in records {
        write_run(dir, r)?;
    }
    write_runs_csv(&dir.join("runs.csv"), records)?;
    let rows = aggregate(records)?;
    write_aggregate_csv(&dir.join("aggregate.csv"), &rows)?;
    crate::plot::write_plots(&dir.join("plots"), records, &rows)?;
    write_metadata(dir, cfg, records.len())
}
