use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::{
    buffer_range, select_action, AgentNet, CodecActionGrid, DisabledActionTable, Episode, Hyperparams, Learner,
    MarlError, ReplayBuffer, TrainStats, BUFFER_RANGES,
};
use crate::env::{EnvError, RateController, ScenarioConfig, StepOutcome, XrEnv};

/// Result of one joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<Vec<f64>>,
    pub state: Vec<f64>,
    pub reward: f64,
    /// No bootstrapping past this step.
    pub terminated: bool,
    /// The failure event that feeds the disabled-action table.
    pub done_event: bool,
    /// The episode hit its step budget.
    pub truncated: bool,
}

/// Cooperative environment with a shared team reward.
pub trait MultiAgentEnv {
    fn agents(&self) -> usize;
    fn obs_len(&self) -> usize;
    fn state_len(&self) -> usize;
    fn actions(&self) -> usize;
    fn reset(&mut self) -> Result<(Vec<Vec<f64>>, Vec<f64>), MarlError>;
    fn step(&mut self, actions: &[usize]) -> Result<EnvStep, MarlError>;

    /// Number of masking contexts (rows of the disabled-action table).
    fn mask_ranges(&self) -> usize {
        1
    }

    /// Masking context for the coming decision.
    fn mask_range(&self) -> usize {
        0
    }
}

/// The XR simulator seen as a three-agent environment with discrete codec
/// levels. The masking context is the buffer-occupancy range of the last
/// observation.
#[derive(Debug, Clone)]
pub struct XrTeamEnv {
    pub env: XrEnv,
    pub grids: [CodecActionGrid; 3],
    last: Option<StepOutcome>,
    range: usize,
}

impl XrTeamEnv {
    pub fn new(config: ScenarioConfig, actions: usize) -> Result<Self, MarlError> {
        let grids = config
            .flows
            .clone()
            .map(|f| CodecActionGrid::new(f.min_rate_mbps, f.max_rate_mbps, actions));
        let [a, b, c] = grids;
        Ok(Self {
            env: XrEnv::new(config)?,
            grids: [a?, b?, c?],
            last: None,
            range: 0,
        })
    }

    /// Outcome of the most recent window, if any since the last reset.
    pub fn last_outcome(&self) -> Option<&StepOutcome> {
        self.last.as_ref()
    }

    pub fn rates_for(&self, actions: &[usize]) -> [f64; 3] {
        [0, 1, 2].map(|i| self.grids[i].rate(actions[i]))
    }
}

impl MultiAgentEnv for XrTeamEnv {
    fn agents(&self) -> usize {
        3
    }

    fn obs_len(&self) -> usize {
        crate::env::OBS_LEN
    }

    fn state_len(&self) -> usize {
        self.env.state_len()
    }

    fn actions(&self) -> usize {
        self.grids[0].len()
    }

    fn reset(&mut self) -> Result<(Vec<Vec<f64>>, Vec<f64>), MarlError> {
        let (obs, state) = self.env.reset();
        self.last = None;
        self.range = buffer_range(obs[0].buffer_occupancy);
        Ok((obs.iter().map(|o| o.to_array().to_vec()).collect(), state.0))
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep, MarlError> {
        if actions.len() != 3 || actions.iter().any(|&a| a >= self.actions()) {
            return Err(MarlError::Config("one in-range action per agent"));
        }
        let out = self.env.step_window(self.rates_for(actions))?;
        self.range = buffer_range(out.observations[0].buffer_occupancy);
        let step = EnvStep {
            obs: out.observations.iter().map(|o| o.to_array().to_vec()).collect(),
            state: out.state.0.clone(),
            reward: out.team_reward,
            terminated: out.done,
            done_event: out.done,
            truncated: out.truncated,
        };
        self.last = Some(out);
        Ok(step)
    }

    fn mask_ranges(&self) -> usize {
        BUFFER_RANGES
    }

    fn mask_range(&self) -> usize {
        self.range
    }
}

/// One-shot cooperative matrix game: every agent sees a constant
/// observation and the team receives `payoff[a0][a1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    payoff: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<Self, MarlError> {
        let k = payoff.len();
        if k < 2 || payoff.iter().any(|r| r.len() != k || r.iter().any(|v| !v.is_finite())) {
            return Err(MarlError::Config("payoff must be a finite square matrix"));
        }
        Ok(Self { payoff })
    }

    /// Joint action with the highest payoff by enumeration (first on ties).
    pub fn optimum(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.payoff.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > self.payoff[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn payoff(&self, a: usize, b: usize) -> f64 {
        self.payoff[a][b]
    }
}

impl MultiAgentEnv for MatrixGame {
    fn agents(&self) -> usize {
        2
    }

    fn obs_len(&self) -> usize {
        1
    }

    fn state_len(&self) -> usize {
        1
    }

    fn actions(&self) -> usize {
        self.payoff.len()
    }

    fn reset(&mut self) -> Result<(Vec<Vec<f64>>, Vec<f64>), MarlError> {
        Ok((vec![vec![1.0]; 2], vec![1.0]))
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep, MarlError> {
        let k = self.actions();
        if actions.len() != 2 || actions.iter().any(|&a| a >= k) {
            return Err(MarlError::Config("one in-range action per agent"));
        }
        Ok(EnvStep {
            obs: vec![vec![1.0]; 2],
            state: vec![1.0],
            reward: self.payoff[actions[0]][actions[1]],
            terminated: true,
            done_event: false,
            truncated: false,
        })
    }
}

/// Summary of one episode played by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub episode: u64,
    pub env_steps: u64,
    pub epsilon: f64,
    pub team_return: f64,
    pub length: usize,
    /// Ended without a failure event.
    pub success: bool,
    pub train: Option<TrainStats>,
    /// Executed actions that were disabled at selection time (must stay 0).
    pub disabled_executions: u64,
    pub table_updates: usize,
}

/// Per-step view handed to trainer observers.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<'a> {
    pub episode: u64,
    pub t: usize,
    pub actions: &'a [usize],
    pub range: usize,
    pub step: &'a EnvStep,
}

/// Interleaves acting and learning: ε-greedy masked selection, table
/// updates on failure events, episode replay and one train step per episode
/// once the buffer holds more than a batch.
#[derive(Debug, Clone)]
pub struct Trainer<E: MultiAgentEnv> {
    pub env: E,
    pub learner: Learner,
    pub table: DisabledActionTable,
    pub replay: ReplayBuffer,
    rng: crate::SimRng,
    env_steps: u64,
    episodes: u64,
    disabled_executions: u64,
}

impl<E: MultiAgentEnv> Trainer<E> {
    pub fn new(env: E, hp: Hyperparams, seed: u64) -> Result<Self, MarlError> {
        if env.actions() != hp.actions {
            return Err(MarlError::Config("environment and hyperparameters disagree on action count"));
        }
        let mut init_rng = crate::seeded_rng(seed ^ 0x5eed_0001);
        let learner = Learner::new(env.agents(), env.obs_len(), env.state_len(), hp.clone(), &mut init_rng)?;
        Ok(Self {
            table: DisabledActionTable::new(env.agents(), hp.actions, env.mask_ranges())?,
            replay: ReplayBuffer::new(hp.buffer_capacity)?,
            learner,
            env,
            rng: crate::seeded_rng(seed ^ 0x5eed_0002),
            env_steps: 0,
            episodes: 0,
            disabled_executions: 0,
        })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn disabled_executions(&self) -> u64 {
        self.disabled_executions
    }

    fn masks(&self, range: usize) -> Vec<u64> {
        (0..self.env.agents()).map(|a| self.table.mask(a, range)).collect()
    }

    /// Plays one exploring episode, stores it and trains once if enough
    /// episodes are stored.
    pub fn train_episode(&mut self) -> Result<EpisodeReport, MarlError> {
        self.train_episode_with(&mut |_, _| {})
    }

    pub fn train_episode_with(&mut self, observer: &mut dyn FnMut(&E, &StepRecord)) -> Result<EpisodeReport, MarlError> {
        let epsilon = self.learner.hp.epsilon(self.env_steps);
        let (episode, mut report) = self.play(true, observer)?;
        self.replay.push(episode)?;
        if self.replay.len() > self.learner.hp.batch_size {
            let batch = self.replay.sample(self.learner.hp.batch_size, &mut self.rng)?;
            match self.learner.train_step(&batch) {
                Ok(stats) => report.train = Some(stats),
                Err(MarlError::Numeric(_)) => report.train = None,
                Err(e) => return Err(e),
            }
        }
        report.epsilon = epsilon;
        Ok(report)
    }

    /// Greedy episode without storage, training or table updates.
    pub fn evaluate_episode_with(&mut self, observer: &mut dyn FnMut(&E, &StepRecord)) -> Result<EpisodeReport, MarlError> {
        Ok(self.play(false, observer)?.1)
    }

    fn play(&mut self, explore: bool, observer: &mut dyn FnMut(&E, &StepRecord)) -> Result<(Episode, EpisodeReport), MarlError> {
        let n = self.env.agents();
        let (mut obs, state) = self.env.reset()?;
        let mut range = self.env.mask_range();
        let mut episode = Episode::new(&obs, &state, &self.masks(range))?;
        let hidden_size = self.learner.hp.agent_hidden;
        let mut hidden = vec![vec![0.0; hidden_size]; n];
        let mut last: Vec<Option<usize>> = vec![None; n];
        let mut report = EpisodeReport {
            episode: self.episodes,
            env_steps: self.env_steps,
            epsilon: 0.0,
            team_return: 0.0,
            length: 0,
            success: true,
            train: None,
            disabled_executions: 0,
            table_updates: 0,
        };
        let mut t = 0;
        loop {
            let epsilon = if explore { self.learner.hp.epsilon(self.env_steps) } else { 0.0 };
            let mut actions = vec![0; n];
            for a in 0..n {
                let (q, h) = self.learner.online.agents[a].agent_q(&obs[a], last[a], &hidden[a])?;
                hidden[a] = h;
                let mask = self.table.mask(a, range);
                let act = select_action(&q, epsilon, mask, &mut self.rng)?;
                if self.table.is_disabled(a, range, act) {
                    report.disabled_executions += 1;
                    self.disabled_executions += 1;
                }
                actions[a] = act;
            }
            let step = self.env.step(&actions)?;
            if explore {
                self.env_steps += 1;
            }
            if step.done_event && explore && self.learner.hp.mode.masks_actions() {
                for (a, &act) in actions.iter().enumerate() {
                    if self.table.update_disabled(a, range, act) {
                        report.table_updates += 1;
                    }
                }
            }
            observer(
                &self.env,
                &StepRecord {
                    episode: self.episodes,
                    t,
                    actions: &actions,
                    range,
                    step: &step,
                },
            );
            let next_range = self.env.mask_range();
            episode.push(&actions, step.reward, step.terminated, &step.obs, &step.state, &self.masks(next_range))?;
            report.team_return += step.reward;
            report.length += 1;
            if step.done_event {
                report.success = false;
            }
            for (l, &a) in last.iter_mut().zip(&actions) {
                *l = Some(a);
            }
            obs = step.obs;
            range = next_range;
            t += 1;
            if step.terminated || step.truncated {
                break;
            }
        }
        if explore {
            self.episodes += 1;
        }
        Ok((episode, report))
    }

    /// Greedy joint action for the environment's reset observation.
    pub fn greedy_first_action(&mut self) -> Result<Vec<usize>, MarlError> {
        let (obs, _) = self.env.reset()?;
        let range = self.env.mask_range();
        let mut out = Vec::with_capacity(obs.len());
        for (a, o) in obs.iter().enumerate() {
            let net = &self.learner.online.agents[a];
            let (q, _) = net.agent_q(o, None, &vec![0.0; net.hidden_size()])?;
            out.push(select_action(&q, 0.0, self.table.mask(a, range), &mut self.rng)?);
        }
        Ok(out)
    }
}

/// Greedy decentralized execution of trained agent networks on the XR
/// simulator, usable wherever a [`RateController`] is expected.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    agents: Vec<AgentNet>,
    table: DisabledActionTable,
    grids: [CodecActionGrid; 3],
    hidden: Vec<Vec<f64>>,
    last: Vec<Option<usize>>,
    name: &'static str,
}

impl GreedyPolicy {
    pub fn new(
        agents: Vec<AgentNet>,
        table: DisabledActionTable,
        grids: [CodecActionGrid; 3],
        name: &'static str,
    ) -> Result<Self, MarlError> {
        if agents.len() != 3 || table.agents() != 3 || table.ranges() != BUFFER_RANGES {
            return Err(MarlError::Config("the XR policy needs three agents"));
        }
        let hidden = agents.iter().map(|a| vec![0.0; a.hidden_size()]).collect();
        Ok(Self {
            agents,
            table,
            grids,
            hidden,
            last: vec![None; 3],
            name,
        })
    }

    pub fn from_trainer(trainer: &Trainer<XrTeamEnv>, name: &'static str) -> Result<Self, MarlError> {
        Self::new(
            trainer.learner.online.agents.clone(),
            trainer.table.clone(),
            trainer.env.grids.clone(),
            name,
        )
    }

    fn act(&mut self, obs: &[[f64; crate::env::OBS_LEN]; 3], occupancy: f64) -> Result<[f64; 3], MarlError> {
        let range = buffer_range(occupancy);
        let mut rates = [0.0; 3];
        for a in 0..3 {
            let (q, h) = self.agents[a].agent_q(&obs[a], self.last[a], &self.hidden[a])?;
            self.hidden[a] = h;
            let act = super::masked_argmax(&q, self.table.mask(a, range))
                .ok_or(MarlError::Invariant("every action is disabled"))?;
            self.last[a] = Some(act);
            rates[a] = self.grids[a].rate(act);
        }
        Ok(rates)
    }
}

impl RateController for GreedyPolicy {
    fn name(&self) -> &str {
        self.name
    }

    fn reset(&mut self) {
        for h in self.hidden.iter_mut() {
            h.iter_mut().for_each(|v| *v = 0.0);
        }
        self.last = vec![None; 3];
    }

    fn next_rates(&mut self, env: &XrEnv, last: Option<&StepOutcome>) -> Result<[f64; 3], EnvError> {
        let (obs, occupancy) = match last {
            Some(out) => (out.observations.map(|o| o.to_array()), out.observations[0].buffer_occupancy),
            None => {
                let o = env.reset_observation();
                (o.map(|o| o.to_array()), 0.0)
            }
        };
        self.act(&obs, occupancy)
            .map_err(|_| EnvError::InvalidInput("policy evaluation failed"))
    }
}

/// Draws an action uniformly from the enabled set; used by tests and
/// random baselines.
pub fn uniform_enabled<R: Rng + ?Sized>(actions: usize, disabled: u64, rng: &mut R) -> Result<usize, MarlError> {
    let q = vec![0.0; actions];
    select_action(&q, 1.0, disabled, rng)
}
