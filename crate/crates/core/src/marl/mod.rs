//! Optimistic weighted QMIX with buffer-driven action masking.
//!
//! Each agent owns a recurrent Q-network over its local observation; a
//! monotone mixer, whose weights come from state-conditioned hypernetworks,
//! combines the chosen-action values into a team value. In optimistic mode
//! the TD error of overestimated targets is down-weighted by `α`.

mod action;
mod agent;
mod hyper;
mod learner;
mod mixer;
mod replay;
mod trainer;

pub use action::{
    buffer_range, epsilon_schedule, masked_argmax, select_action, CodecActionGrid, DisabledActionTable,
    BUFFER_RANGES, BUFFER_RANGE_EDGES,
};
pub use agent::{AgentNet, AgentSeqTape};
pub use hyper::{optimistic_weight, Hyperparams, Mode};
pub use learner::{Learner, LossReport, QmixNets, TrainStats};
pub use mixer::{HyperNet, MixerNet, MixerTape};
pub use replay::{Episode, EpisodeBatch, ReplayBuffer};
pub use trainer::{
    uniform_enabled, EnvStep, EpisodeReport, GreedyPolicy, MatrixGame, MultiAgentEnv, StepRecord, Trainer,
    XrTeamEnv,
};

use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarlError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
    #[error("invariant violated: {0}")]
    Invariant(&'static str),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
}
