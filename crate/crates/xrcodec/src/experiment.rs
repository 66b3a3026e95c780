//! Seeded runs of the learners and the APS baseline.

use anyhow::{anyhow, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xrcodec_core::baselines::ApsController;
use xrcodec_core::env::{play_episode, RateController, StepOutcome, XrEnv};
use xrcodec_core::marl::{GreedyPolicy, Mode, Trainer, XrTeamEnv};

use crate::checkpoint::Checkpoint;
use crate::config::{Algorithm, ExperimentConfig, RingName};
use crate::stats::success_rate;

/// Evaluation uses its own channel and traffic realizations, derived from
/// the run seed so that every algorithm sees the same ones.
pub const EVAL_SEED_SALT: u64 = 0x0e7a_15ee_d000_0000;

pub fn eval_seed(seed: u64) -> u64 {
    seed ^ EVAL_SEED_SALT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Eval,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub phase: Phase,
    pub episode: u64,
    /// Exploration steps taken before the episode started.
    pub env_steps: u64,
    pub epsilon: f64,
    pub windows: usize,
    pub team_return: f64,
    /// Team return per window.
    pub reward: f64,
    pub success: bool,
    pub loss: Option<f64>,
    pub grad_norm: Option<f64>,
    pub mean_weight: Option<f64>,
    /// Size of the disabled-action table after the episode.
    pub disabled_actions: usize,
}

/// One flow in one evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRow {
    pub episode: u64,
    pub window: usize,
    pub flow: String,
    pub class: String,
    pub rate_mbps: f64,
    pub throughput_mbps: f64,
    pub goodput_mbps: f64,
    pub delay_ms: f64,
    pub jitter_ms: f64,
    pub pdr: f64,
    pub xqi: u8,
    pub team_reward: f64,
    pub buffer_occupancy: f64,
    pub done: bool,
}

/// Per-run indicators, means over every evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub ring: RingName,
    pub seed: u64,
    pub train_episodes: u64,
    pub env_steps: u64,
    pub eval_episodes: u64,
    pub eval_windows: u64,
    pub success_rate: f64,
    pub reward: f64,
    pub xqi: f64,
    pub delay_ms: f64,
    pub jitter_ms: f64,
    pub plr: f64,
    pub throughput_mbps: f64,
    pub goodput_mbps: f64,
    pub throughput_ar_mbps: f64,
    pub throughput_vr_mbps: f64,
    pub throughput_cg_mbps: f64,
    pub goodput_ar_mbps: f64,
    pub goodput_vr_mbps: f64,
    pub goodput_cg_mbps: f64,
    pub disabled_executions: u64,
}

/// Names of the summary columns that are aggregated across seeds.
pub const METRICS: [&str; 14] = [
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
];

impl RunSummary {
    /// Values in [`METRICS`] order.
    pub fn metrics(&self) -> [f64; 14] {
        [
            self.success_rate,
            self.reward,
            self.xqi,
            self.delay_ms,
            self.jitter_ms,
            self.plr,
            self.throughput_mbps,
            self.goodput_mbps,
            self.throughput_ar_mbps,
            self.throughput_vr_mbps,
            self.throughput_cg_mbps,
            self.goodput_ar_mbps,
            self.goodput_vr_mbps,
            self.goodput_cg_mbps,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub summary: RunSummary,
    /// Training episodes followed by evaluation episodes (APS: evaluation only).
    pub episodes: Vec<EpisodeRow>,
    pub kpi: Vec<KpiRow>,
    pub checkpoint: Option<Checkpoint>,
}

impl RunRecord {
    pub fn training(&self) -> impl Iterator<Item = &EpisodeRow> {
        self.episodes.iter().filter(|e| e.phase == Phase::Train)
    }

    pub fn evaluation(&self) -> impl Iterator<Item = &EpisodeRow> {
        self.episodes.iter().filter(|e| e.phase == Phase::Eval)
    }
}

/// Window-mean accumulator for [`RunSummary`].
#[derive(Debug, Default)]
struct WindowMeans {
    n: u64,
    sums: [f64; 13],
}

impl WindowMeans {
    fn add(&mut self, out: &StepOutcome) {
        let flows = &out.kpi.flows;
        let nf = flows.len() as f64;
        let types = &out.kpi.types;
        let row = [
            out.team_reward,
            types.iter().map(|t| t.xqi as f64).sum::<f64>() / 3.0,
            flows.iter().map(|f| f.mean_delay_ms).sum::<f64>() / nf,
            flows.iter().map(|f| f.jitter_ms).sum::<f64>() / nf,
            flows.iter().map(|f| 1.0 - f.pdr).sum::<f64>() / nf,
            flows.iter().map(|f| f.throughput_mbps).sum(),
            flows.iter().map(|f| f.goodput_mbps).sum(),
            types[0].throughput_mbps,
            types[1].throughput_mbps,
            types[2].throughput_mbps,
            types[0].goodput_mbps,
            types[1].goodput_mbps,
            types[2].goodput_mbps,
        ];
        for (s, v) in self.sums.iter_mut().zip(row) {
            *s += v;
        }
        self.n += 1;
    }

    fn means(&self) -> [f64; 13] {
        let n = self.n.max(1) as f64;
        self.sums.map(|s| s / n)
    }
}

/// Per-window checks that must hold in any run; a violation aborts it.
fn check_window(out: &StepOutcome) -> Result<()> {
    for (i, f) in out.kpi.flows.iter().enumerate() {
        ensure!((0.0..=1.0).contains(&f.pdr), "flow {i}: PDR {} outside [0, 1]", f.pdr);
        ensure!(
            f.throughput_mbps >= 0.0 && f.goodput_mbps <= f.throughput_mbps + 1e-9,
            "flow {i}: goodput {} exceeds throughput {}",
            f.goodput_mbps,
            f.throughput_mbps
        );
    }
    ensure!(out.team_reward.is_finite(), "non-finite team reward");
    ensure!((0.0..=1.0).contains(&out.kpi.buffer_occupancy), "buffer occupancy outside [0, 1]");
    Ok(())
}

fn check_conservation(env: &XrEnv) -> Result<()> {
    let queued = env.queued_per_flow();
    for (i, c) in env.counters().iter().enumerate() {
        ensure!(
            c.generated == c.resolved() + queued[i],
            "flow {i}: packet conservation violated ({} generated, {} resolved, {} queued)",
            c.generated,
            c.resolved(),
            queued[i]
        );
    }
    Ok(())
}

fn kpi_rows(env: &XrEnv, episode: u64, out: &StepOutcome) -> Vec<KpiRow> {
    let labels = env.flow_labels();
    out.kpi
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let agent = env.flow_agent(i);
            KpiRow {
                episode,
                window: out.window,
                flow: labels[i].clone(),
                class: env.config().flows[agent].kind.name().to_string(),
                rate_mbps: out.kpi.rates_mbps[agent],
                throughput_mbps: f.throughput_mbps,
                goodput_mbps: f.goodput_mbps,
                delay_ms: f.mean_delay_ms,
                jitter_ms: f.jitter_ms,
                pdr: f.pdr,
                xqi: out.kpi.types[agent].xqi,
                team_reward: out.team_reward,
                buffer_occupancy: out.kpi.buffer_occupancy,
                done: out.done,
            }
        })
        .collect()
}

struct Evaluation {
    episodes: Vec<EpisodeRow>,
    kpi: Vec<KpiRow>,
    means: WindowMeans,
    flags: Vec<bool>,
}

/// Plays `count` episodes with `controller` on the evaluation realization
/// of `seed`.
fn evaluate(cfg: &ExperimentConfig, seed: u64, controller: &mut dyn RateController, count: u64) -> Result<Evaluation> {
    let mut env = XrEnv::new(cfg.scenario(eval_seed(seed)))?;
    let mut eval = Evaluation {
        episodes: Vec::new(),
        kpi: Vec::new(),
        means: WindowMeans::default(),
        flags: Vec::new(),
    };
    for episode in 0..count {
        let mut outcomes = Vec::with_capacity(cfg.windows_per_episode);
        let summary = play_episode(&mut env, controller, &mut |out| outcomes.push(out.clone()))?;
        check_conservation(&env)?;
        for out in &outcomes {
            check_window(out)?;
            eval.means.add(out);
            eval.kpi.extend(kpi_rows(&env, episode, out));
        }
        eval.flags.push(summary.success);
        eval.episodes.push(EpisodeRow {
            phase: Phase::Eval,
            episode,
            env_steps: 0,
            epsilon: 0.0,
            windows: summary.windows,
            team_return: summary.team_return,
            reward: summary.team_return / summary.windows as f64,
            success: summary.success,
            loss: None,
            grad_norm: None,
            mean_weight: None,
            disabled_actions: 0,
        });
    }
    Ok(eval)
}

fn summarize(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    seed: u64,
    train_episodes: u64,
    env_steps: u64,
    eval: &Evaluation,
    disabled_executions: u64,
) -> Result<RunSummary> {
    let m = eval.means.means();
    Ok(RunSummary {
        algorithm,
        ring: cfg.ring,
        seed,
        train_episodes,
        env_steps,
        eval_episodes: eval.flags.len() as u64,
        eval_windows: eval.means.n,
        success_rate: success_rate(&eval.flags)?,
        reward: m[0],
        xqi: m[1],
        delay_ms: m[2],
        jitter_ms: m[3],
        plr: m[4],
        throughput_mbps: m[5],
        goodput_mbps: m[6],
        throughput_ar_mbps: m[7],
        throughput_vr_mbps: m[8],
        throughput_cg_mbps: m[9],
        goodput_ar_mbps: m[10],
        goodput_vr_mbps: m[11],
        goodput_cg_mbps: m[12],
        disabled_executions,
    })
}

fn table_size(t: &xrcodec_core::marl::DisabledActionTable) -> usize {
    t.raw_masks().iter().map(|m| m.count_ones() as usize).sum()
}

/// Trains one learner for `cfg.episodes` episodes (or until the step cap),
/// then evaluates it greedily.
fn run_learner(cfg: &ExperimentConfig, algorithm: Algorithm, mode: Mode, seed: u64) -> Result<RunRecord> {
    let hp = cfg.hyperparams(mode);
    let env = XrTeamEnv::new(cfg.scenario(seed), hp.actions)?;
    let mut trainer = Trainer::new(env, hp, seed)?;
    let mut episodes = Vec::new();
    while trainer.episodes() < cfg.episodes && trainer.env_steps() < cfg.max_env_steps {
        let before = trainer.table.clone();
        let mut failure: Option<anyhow::Error> = None;
        let report = trainer.train_episode_with(&mut |team: &XrTeamEnv, _| {
            if failure.is_some() {
                return;
            }
            let checked = check_conservation(&team.env)
                .and_then(|_| team.last_outcome().map_or(Ok(()), check_window));
            failure = checked.err();
        })?;
        if let Some(e) = failure {
            return Err(e.context(format!("training episode {}", report.episode)));
        }
        ensure!(
            report.disabled_executions == 0,
            "episode {}: {} disabled actions were executed",
            report.episode,
            report.disabled_executions
        );
        ensure!(
            trainer.table.contains(&before),
            "episode {}: the disabled-action table lost an entry",
            report.episode
        );
        episodes.push(EpisodeRow {
            phase: Phase::Train,
            episode: report.episode,
            env_steps: report.env_steps,
            epsilon: report.epsilon,
            windows: report.length,
            team_return: report.team_return,
            reward: report.team_return / report.length as f64,
            success: report.success,
            loss: report.train.map(|t| t.loss),
            grad_norm: report.train.map(|t| t.grad_norm),
            mean_weight: report.train.map(|t| t.mean_weight),
            disabled_actions: table_size(&trainer.table),
        });
    }
    let mut policy = GreedyPolicy::from_trainer(&trainer, mode.name())?;
    let eval = evaluate(cfg, seed, &mut policy, cfg.eval_episodes)?;
    let summary = summarize(
        cfg,
        algorithm,
        seed,
        trainer.episodes(),
        trainer.env_steps(),
        &eval,
        trainer.disabled_executions(),
    )?;
    let checkpoint = cfg.checkpoint.then(|| Checkpoint::capture(cfg, algorithm, seed, &trainer));
    episodes.extend(eval.episodes);
    Ok(RunRecord {
        summary,
        episodes,
        kpi: eval.kpi,
        checkpoint,
    })
}

fn run_aps(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let probe = XrEnv::new(cfg.scenario(eval_seed(seed)))?;
    let mut aps = ApsController::new(cfg.aps_thresholds(), &probe)?;
    let eval = evaluate(cfg, seed, &mut aps, cfg.episodes)?;
    let summary = summarize(cfg, Algorithm::Aps, seed, 0, 0, &eval, 0)?;
    Ok(RunRecord {
        summary,
        episodes: eval.episodes,
        kpi: eval.kpi,
        checkpoint: None,
    })
}

/// One seeded run of `cfg.algorithm` at `cfg.ring`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let run = match cfg.algorithm.mode() {
        Some(mode) => run_learner(cfg, cfg.algorithm, mode, seed),
        None => run_aps(cfg, seed),
    };
    run.with_context(|| format!("{} run at the {} ring, seed {seed}", cfg.algorithm, cfg.ring))
}

/// Greedy evaluation of a saved learner on its evaluation realization.
pub fn evaluate_checkpoint(cp: &Checkpoint, episodes: u64) -> Result<RunRecord> {
    let cfg = &cp.config;
    let mut policy = cp.policy()?;
    let eval = evaluate(cfg, cp.seed, &mut policy, episodes)?;
    let summary = summarize(cfg, cp.algorithm, cp.seed, cp.episodes, cp.env_steps, &eval, 0)?;
    Ok(RunRecord {
        summary,
        episodes: eval.episodes,
        kpi: eval.kpi,
        checkpoint: None,
    })
}

/// Runs every seed of `cfg` without writing anything. Seeds run in
/// parallel; the result is ordered by seed.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed)).collect()
}

/// Runs every (algorithm, ring) pair of the plan for all seeds of `base`.
pub fn execute_plan(base: &ExperimentConfig, algorithms: &[Algorithm], rings: &[RingName]) -> Result<Vec<RunRecord>> {
    if algorithms.is_empty() || rings.is_empty() {
        return Err(anyhow!("a comparison needs at least one algorithm and one ring"));
    }
    let mut jobs = Vec::new();
    for &algorithm in algorithms {
        for &ring in rings {
            let cfg = ExperimentConfig {
                algorithm,
                ring,
                ..base.clone()
            };
            cfg.validate()?;
            for &seed in &base.seeds {
                jobs.push((cfg.clone(), seed));
            }
        }
    }
    jobs.par_iter().map(|(cfg, seed)| run_seed(cfg, *seed)).collect()
}

/// Executes `cfg` and writes every output below `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let records = execute(cfg)?;
    crate::output::emit_outputs(&records, cfg, &cfg.out_dir)?;
    Ok(records)
}
