//! JSON checkpoints of trained learners.
//!
//! Network weights are stored as the flat parameter vectors produced by the
//! core crate, so the file layout follows the network layout exactly.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use xrcodec_core::env::{XrEnv, OBS_LEN};
use xrcodec_core::marl::{DisabledActionTable, GreedyPolicy, Learner, Trainer, XrTeamEnv, BUFFER_RANGES};
use xrcodec_core::nn::{flatten, load_flat, OptimizerState};

use crate::config::{Algorithm, ExperimentConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Configuration of the run, with the output directory cleared.
    pub config: ExperimentConfig,
    pub episodes: u64,
    pub env_steps: u64,
    pub train_steps: u64,
    pub online: Vec<f64>,
    pub target: Vec<f64>,
    pub rms_accumulator: Vec<f64>,
    /// Disabled-action bitmasks, agent-major over buffer ranges.
    pub table_masks: Vec<u64>,
}

impl Checkpoint {
    pub fn capture(cfg: &ExperimentConfig, algorithm: Algorithm, seed: u64, trainer: &Trainer<XrTeamEnv>) -> Self {
        let learner = &trainer.learner;
        Self {
            format: FORMAT_VERSION,
            algorithm,
            seed,
            config: ExperimentConfig {
                algorithm,
                out_dir: PathBuf::new(),
                ..cfg.clone()
            },
            episodes: trainer.episodes(),
            env_steps: trainer.env_steps(),
            train_steps: learner.train_steps(),
            online: flatten(&learner.online),
            target: flatten(&learner.target),
            rms_accumulator: learner.optimizer.accumulator.clone(),
            table_masks: trainer.table.raw_masks().to_vec(),
        }
    }

    /// Rebuilds the learner and its disabled-action table.
    pub fn restore(&self) -> Result<(Learner, DisabledActionTable)> {
        ensure!(self.format == FORMAT_VERSION, "unsupported checkpoint format {}", self.format);
        let mode = self
            .algorithm
            .mode()
            .ok_or_else(|| anyhow!("{} has no learned state", self.algorithm))?;
        self.config.validate()?;
        let hp = self.config.hyperparams(mode);
        let state_len = XrEnv::new(self.config.scenario(self.seed))?.state_len();
        let mut shell = Learner::new(3, OBS_LEN, state_len, hp.clone(), &mut xrcodec_core::seeded_rng(0))?;
        load_flat(&mut shell.online, &self.online).context("online parameters")?;
        load_flat(&mut shell.target, &self.target).context("target parameters")?;
        let mut optimizer = OptimizerState::new(self.online.len(), hp.learning_rate, hp.rms_decay, hp.rms_epsilon)?;
        ensure!(
            self.rms_accumulator.len() == self.online.len() && self.rms_accumulator.iter().all(|v| *v >= 0.0),
            "optimizer state does not match the parameters"
        );
        optimizer.accumulator.copy_from_slice(&self.rms_accumulator);
        let learner = Learner::from_parts(hp.clone(), shell.online, shell.target, optimizer, self.train_steps)?;
        let table = DisabledActionTable::from_masks(3, hp.actions, BUFFER_RANGES, &self.table_masks)?;
        Ok((learner, table))
    }

    /// Greedy decentralized policy of the saved agents.
    pub fn policy(&self) -> Result<GreedyPolicy> {
        let (learner, table) = self.restore()?;
        let mode = learner.hp.mode;
        let env = XrTeamEnv::new(self.config.scenario(self.seed), learner.hp.actions)?;
        Ok(GreedyPolicy::new(learner.online.agents, table, env.grids, mode.name())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoints always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing checkpoint {}", path.display()))
    }
}
