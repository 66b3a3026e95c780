use super::MarlError;

/// Loss weighting: plain QMIX (`w ≡ 1`) or optimistic weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Qmix,
    Oqmix,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Qmix => "qmix",
            Mode::Oqmix => "oqmix",
        }
    }

    /// Only oQMIX grows the disabled-action table; plain QMIX never masks.
    pub fn masks_actions(self) -> bool {
        self == Mode::Oqmix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub mode: Mode,
    pub gamma: f64,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Environment steps over which ε decays linearly.
    pub epsilon_anneal_steps: u64,
    /// Weight of overestimated targets in optimistic mode.
    pub alpha: f64,
    /// Training steps between hard target updates.
    pub target_update_period: u64,
    pub max_env_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Codec levels per agent.
    pub actions: usize,
    pub agent_hidden: usize,
    pub mixer_embed: usize,
    pub hyper_hidden: usize,
    /// Global L2 gradient-norm limit; `None` disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            mode: Mode::Oqmix,
            gamma: 0.99,
            learning_rate: 8e-3,
            rms_decay: 0.99,
            rms_epsilon: 1e-5,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_anneal_steps: 15_000,
            alpha: 0.1,
            target_update_period: 200,
            max_env_steps: 300_000,
            batch_size: 64,
            buffer_capacity: 2000,
            actions: 8,
            agent_hidden: 64,
            mixer_embed: 32,
            hyper_hidden: 64,
            grad_clip: Some(10.0),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), MarlError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(MarlError::Config("gamma must lie in [0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MarlError::Config("alpha must lie in (0, 1]"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(MarlError::Config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.rms_decay) || !(self.rms_epsilon > 0.0) {
            return Err(MarlError::Config("RMSProp decay must lie in [0, 1) and epsilon be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_end)
            || !(0.0..=1.0).contains(&self.epsilon_start)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(MarlError::Config("need 0 <= epsilon_end <= epsilon_start <= 1"));
        }
        if self.target_update_period == 0 || self.batch_size == 0 {
            return Err(MarlError::Config("target period and batch size must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(MarlError::Config("replay capacity must hold a batch"));
        }
        if !(2..=64).contains(&self.actions) {
            return Err(MarlError::Config("action count must lie in 2..=64"));
        }
        if self.agent_hidden == 0 || self.mixer_embed == 0 || self.hyper_hidden == 0 {
            return Err(MarlError::Config("network widths must be positive"));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(MarlError::Config("gradient clip must be positive"));
        }
        Ok(())
    }

    pub fn epsilon(&self, env_step: u64) -> f64 {
        super::epsilon_schedule(env_step, self.epsilon_start, self.epsilon_end, self.epsilon_anneal_steps)
    }
}

/// `1` if the mixed value underestimates the target, `α` otherwise; always
/// `1` in plain QMIX mode.
pub fn optimistic_weight(q_tot: f64, y: f64, mode: Mode, alpha: f64) -> f64 {
    match mode {
        Mode::Qmix => 1.0,
        Mode::Oqmix if q_tot < y => 1.0,
        Mode::Oqmix => alpha,
    }
}
