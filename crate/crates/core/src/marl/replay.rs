use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::MarlError;

/// One recorded episode of `T` transitions. Observations, states and
/// disabled-action masks hold `T + 1` entries (the last is the state after
/// the final action).
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    agents: usize,
    obs_len: usize,
    state_len: usize,
    pub obs: Vec<f64>,
    pub states: Vec<f64>,
    pub disabled: Vec<u64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub terminated: Vec<bool>,
}

impl Episode {
    pub fn new(obs: &[Vec<f64>], state: &[f64], disabled: &[u64]) -> Result<Self, MarlError> {
        let agents = obs.len();
        if agents == 0 || disabled.len() != agents {
            return Err(MarlError::Config("episode needs one observation and mask per agent"));
        }
        let obs_len = obs[0].len();
        let mut e = Self {
            agents,
            obs_len,
            state_len: state.len(),
            obs: Vec::new(),
            states: Vec::new(),
            disabled: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminated: Vec::new(),
        };
        e.push_view(obs, state, disabled)?;
        Ok(e)
    }

    fn push_view(&mut self, obs: &[Vec<f64>], state: &[f64], disabled: &[u64]) -> Result<(), MarlError> {
        if obs.len() != self.agents
            || obs.iter().any(|o| o.len() != self.obs_len)
            || state.len() != self.state_len
            || disabled.len() != self.agents
        {
            return Err(MarlError::Config("inconsistent transition dimensions"));
        }
        for o in obs {
            self.obs.extend_from_slice(o);
        }
        self.states.extend_from_slice(state);
        self.disabled.extend_from_slice(disabled);
        Ok(())
    }

    /// Appends the transition taken with `actions`.
    pub fn push(
        &mut self,
        actions: &[usize],
        reward: f64,
        terminated: bool,
        next_obs: &[Vec<f64>],
        next_state: &[f64],
        next_disabled: &[u64],
    ) -> Result<(), MarlError> {
        if actions.len() != self.agents {
            return Err(MarlError::Config("one action per agent"));
        }
        if !reward.is_finite() {
            return Err(MarlError::Numeric("non-finite reward"));
        }
        self.push_view(next_obs, next_state, next_disabled)?;
        self.actions.extend_from_slice(actions);
        self.rewards.push(reward);
        self.terminated.push(terminated);
        Ok(())
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn team_return(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Fixed-capacity episode store; the oldest episode is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Episode>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, MarlError> {
        if capacity == 0 {
            return Err(MarlError::Config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            episodes: VecDeque::with_capacity(capacity.min(4096)),
        })
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, episode: Episode) -> Result<(), MarlError> {
        if episode.is_empty() {
            return Err(MarlError::Config("cannot store an empty episode"));
        }
        if let Some(first) = self.episodes.front() {
            if first.agents != episode.agents
                || first.obs_len != episode.obs_len
                || first.state_len != episode.state_len
            {
                return Err(MarlError::Config("episode shape differs from stored episodes"));
            }
        }
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<&Episode> {
        self.episodes.get(i)
    }

    /// Indices of `batch` distinct episodes, uniformly at random.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>, MarlError> {
        if batch == 0 || batch > self.episodes.len() {
            return Err(MarlError::Config("batch size exceeds stored episodes"));
        }
        Ok(rand::seq::index::sample(rng, self.episodes.len(), batch).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<EpisodeBatch, MarlError> {
        let idx = self.sample_indices(batch, rng)?;
        let eps: Vec<&Episode> = idx.iter().map(|&i| &self.episodes[i]).collect();
        EpisodeBatch::from_episodes(&eps)
    }
}

/// Episodes padded to a common length `L`, time-major. Per-step arrays have
/// `L` entries per row; observation-like arrays have `L + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeBatch {
    pub rows: usize,
    pub steps: usize,
    pub agents: usize,
    pub obs_len: usize,
    pub state_len: usize,
    /// `[(t·rows + b)·agents + a]·obs_len`, `t ∈ 0..=L`.
    pub obs: Vec<f64>,
    /// `[t·rows + b]·state_len`, `t ∈ 0..=L`.
    pub states: Vec<f64>,
    /// `[(t·rows + b)·agents + a]`, `t ∈ 0..=L`.
    pub disabled: Vec<u64>,
    /// `[(t·rows + b)·agents + a]`, `t ∈ 0..L`.
    pub actions: Vec<usize>,
    /// `[t·rows + b]`, `t ∈ 0..L`.
    pub rewards: Vec<f64>,
    pub terminated: Vec<bool>,
    /// 1 for real transitions, 0 for padding.
    pub mask: Vec<f64>,
}

impl EpisodeBatch {
    pub fn from_episodes(eps: &[&Episode]) -> Result<Self, MarlError> {
        let first = eps.first().ok_or(MarlError::Config("empty batch"))?;
        let (n, o, s) = (first.agents, first.obs_len, first.state_len);
        if eps.iter().any(|e| e.agents != n || e.obs_len != o || e.state_len != s) {
            return Err(MarlError::Config("episodes in a batch must share their shape"));
        }
        let rows = eps.len();
        let steps = eps.iter().map(|e| e.len()).max().unwrap_or(0);
        let mut b = Self {
            rows,
            steps,
            agents: n,
            obs_len: o,
            state_len: s,
            obs: vec![0.0; (steps + 1) * rows * n * o],
            states: vec![0.0; (steps + 1) * rows * s],
            disabled: vec![0; (steps + 1) * rows * n],
            actions: vec![0; steps * rows * n],
            rewards: vec![0.0; steps * rows],
            terminated: vec![false; steps * rows],
            mask: vec![0.0; steps * rows],
        };
        for (r, e) in eps.iter().enumerate() {
            for t in 0..=e.len() {
                let dst = (t * rows + r) * n;
                b.obs[dst * o..(dst + n) * o].copy_from_slice(&e.obs[t * n * o..(t + 1) * n * o]);
                b.disabled[dst..dst + n].copy_from_slice(&e.disabled[t * n..(t + 1) * n]);
                b.states[(t * rows + r) * s..(t * rows + r + 1) * s]
                    .copy_from_slice(&e.states[t * s..(t + 1) * s]);
            }
            for t in 0..e.len() {
                let dst = (t * rows + r) * n;
                b.actions[dst..dst + n].copy_from_slice(&e.actions[t * n..(t + 1) * n]);
                b.rewards[t * rows + r] = e.rewards[t];
                b.terminated[t * rows + r] = e.terminated[t];
                b.mask[t * rows + r] = 1.0;
            }
        }
        Ok(b)
    }

    pub fn valid_steps(&self) -> usize {
        self.mask.iter().filter(|&&m| m > 0.0).count()
    }
}
