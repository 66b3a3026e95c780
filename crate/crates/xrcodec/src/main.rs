use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use xrcodec::config::{Algorithm, ExperimentConfig, RingName};
use xrcodec::{emit_outputs, evaluate_checkpoint, execute_plan, Checkpoint};

#[derive(Parser)]
#[command(name = "xrcodec", version, about = "Cooperative codec-rate adaptation experiments for XR downlink traffic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or, for aps, run) one algorithm at one ring for every seed.
    Train(Common),
    /// Evaluate saved checkpoints greedily, or run APS episodes.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint files produced by `train`.
        #[arg(long, num_args = 1.., value_name = "PATH")]
        checkpoint: Vec<PathBuf>,
    },
    /// Run every algorithm at every ring and aggregate.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; missing keys take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Algorithm(s): oqmix, qmix, aps (comma separated for compare).
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    /// Ring(s): near, mid, far (comma separated for compare).
    #[arg(long, value_delimiter = ',')]
    ring: Vec<RingName>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap on training environment steps.
    #[arg(long)]
    steps: Option<u64>,
    /// Training episodes (learners) or played episodes (aps).
    #[arg(long)]
    episodes: Option<u64>,
}

impl Common {
    fn base_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(&a) = self.algo.first() {
            cfg.algorithm = a;
        }
        if let Some(&r) = self.ring.first() {
            cfg.ring = r;
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(steps) = self.steps {
            cfg.max_env_steps = steps;
        }
        if let Some(episodes) = self.episodes {
            cfg.episodes = episodes;
        }
        cfg.validate().context("invalid configuration")?;
        Ok(cfg)
    }
}

fn report(out: &std::path::Path, records: &[xrcodec::RunRecord]) {
    for r in records {
        let s = &r.summary;
        eprintln!(
            "{:>5} {:>4} seed {:>3}: success {:.3}  reward {:.3}  plr {:.4}  throughput {:.2} Mbps",
            s.algorithm.name(),
            s.ring.name(),
            s.seed,
            s.success_rate,
            s.reward,
            s.plr,
            s.throughput_mbps
        );
    }
    eprintln!("outputs written to {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            if common.algo.len() > 1 || common.ring.len() > 1 {
                bail!("train takes one algorithm and one ring; use compare for sweeps");
            }
            let cfg = common.base_config()?;
            let records = execute_plan(&cfg, &[cfg.algorithm], &[cfg.ring])?;
            emit_outputs(&records, &cfg, &cfg.out_dir)?;
            report(&cfg.out_dir, &records);
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.base_config()?;
            let records = if checkpoint.is_empty() {
                if cfg.algorithm != Algorithm::Aps {
                    bail!("eval of a learner needs --checkpoint");
                }
                execute_plan(&cfg, &[Algorithm::Aps], &[cfg.ring])?
            } else {
                let episodes = common.episodes.unwrap_or(cfg.eval_episodes);
                checkpoint
                    .iter()
                    .map(|p| evaluate_checkpoint(&Checkpoint::load(p)?, episodes))
                    .collect::<Result<Vec<_>>>()?
            };
            emit_outputs(&records, &cfg, &cfg.out_dir)?;
            report(&cfg.out_dir, &records);
        }
        Command::Compare(common) => {
            let cfg = common.base_config()?;
            let algorithms = if common.algo.is_empty() { Algorithm::ALL.to_vec() } else { common.algo.clone() };
            let rings = if common.ring.is_empty() { RingName::ALL.to_vec() } else { common.ring.clone() };
            let records = execute_plan(&cfg, &algorithms, &rings)?;
            emit_outputs(&records, &cfg, &cfg.out_dir)?;
            report(&cfg.out_dir, &records);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
