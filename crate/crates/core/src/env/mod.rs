//! Windowed packet-level downlink simulator for three XR traffic classes.
//!
//! One base station serves three UEs (AR, VR and CG) through a single
//! byte-limited RLC transmit buffer. Each observation window the link to every
//! UE gets a rate from pathloss, shadowing and a capped Shannon bound; frames
//! are generated at the codec rates chosen by the controller, fragmented into
//! packets, queued FIFO and served with per-UE airtime.

mod buffer;
mod kpi;
mod link;
mod mobility;
mod reward;
mod sim;
mod traffic;

pub use buffer::{QueuedPacket, RlcBuffer};
pub use kpi::{FlowCounters, FlowKpi, KpiWindow, TypeKpi};
pub use link::{
    capacity_bps, noise_floor_dbm, pathloss_uma_nlos, sample_window_capacity,
    shannon_window_bits, snr_db, window_capacity, LinkConfig,
};
pub use mobility::{Ring, UeMotion};
pub use reward::{agent_rewards, reward_xqi, team_reward, xqi_level, XqiLevel, PENALTY};
pub use sim::{AgentObservation, GlobalState, ScenarioConfig, StepOutcome, XrEnv, OBS_LEN};
pub use traffic::{generate_frames, packetize, FlowSpec, Frame};

/// Traffic class; also the agent index (AR = 0, VR = 1, CG = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrafficKind {
    Ar,
    Vr,
    Cg,
}

impl TrafficKind {
    pub const ALL: [TrafficKind; 3] = [TrafficKind::Ar, TrafficKind::Vr, TrafficKind::Cg];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficKind::Ar => "ar",
            TrafficKind::Vr => "vr",
            TrafficKind::Cg => "cg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("codec rate {rate} Mbps outside [{min}, {max}]")]
    RateOutOfBounds { rate: f64, min: f64, max: f64 },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Chooses the codec rates of every traffic class for the next window.
pub trait RateController {
    fn name(&self) -> &str;

    /// Called at the start of each episode.
    fn reset(&mut self);

    /// `last` is `None` for the first window of an episode.
    fn next_rates(&mut self, env: &XrEnv, last: Option<&StepOutcome>) -> Result<[f64; 3], EnvError>;
}

/// Totals of one controller-driven episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub windows: usize,
    pub team_return: f64,
    /// Played every window without the done condition.
    pub success: bool,
}

/// Resets `env` and plays one episode with `controller`, handing every
/// window outcome to `observer`.
pub fn play_episode(
    env: &mut XrEnv,
    controller: &mut dyn RateController,
    observer: &mut dyn FnMut(&StepOutcome),
) -> Result<EpisodeSummary, EnvError> {
    env.reset();
    controller.reset();
    let mut last: Option<StepOutcome> = None;
    let mut summary = EpisodeSummary {
        windows: 0,
        team_return: 0.0,
        success: true,
    };
    loop {
        let rates = controller.next_rates(env, last.as_ref())?;
        let out = env.step_window(rates)?;
        observer(&out);
        summary.windows += 1;
        summary.team_return += out.team_reward;
        let end = out.done || out.truncated;
        summary.success &= !out.done;
        last = Some(out);
        if end {
            return Ok(summary);
        }
    }
}
