use super::EnvError;

/// Reward every agent receives when some flow delivered nothing.
pub const PENALTY: f64 = -1.0;

/// XR quality index, 1 (bad) to 5 (excellent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct XqiLevel(u8);

impl XqiLevel {
    pub fn level(self) -> u8 {
        self.0
    }

    /// 5..1 ↦ 1, 0.75, 0.5, 0.25, 0.
    pub fn reward(self) -> f64 {
        f64::from(self.0 - 1) / 4.0
    }
}

/// Maps `(PDR %, mean delay ms)` to a quality level; first matching row wins.
///
/// | level | PDR    | delay  |
/// |-------|--------|--------|
/// | 5     | ≥ 99   | ≤ 7    |
/// | 4     | ≥ 99   | ≤ 10   |
/// | 3     | ≥ 95   | ≤ 13   |
/// | 2     | ≥ 95   | ≤ 20   |
/// | 1     | otherwise       |
pub fn xqi_level(pdr_percent: f64, delay_ms: f64) -> Result<XqiLevel, EnvError> {
    if !(0.0..=100.0).contains(&pdr_percent) {
        return Err(EnvError::InvalidInput("PDR must lie in [0, 100] percent"));
    }
    if !(delay_ms >= 0.0) {
        return Err(EnvError::InvalidInput("delay must be non-negative"));
    }
    let level = if pdr_percent >= 99.0 && delay_ms <= 7.0 {
        5
    } else if pdr_percent >= 99.0 && delay_ms <= 10.0 {
        4
    } else if pdr_percent >= 95.0 && delay_ms <= 13.0 {
        3
    } else if pdr_percent >= 95.0 && delay_ms <= 20.0 {
        2
    } else {
        1
    };
    Ok(XqiLevel(level))
}

pub fn reward_xqi(pdr_percent: f64, delay_ms: f64) -> Result<f64, EnvError> {
    Ok(xqi_level(pdr_percent, delay_ms)?.reward())
}

/// Team reward: the worst agent's reward.
pub fn team_reward(rewards: &[f64]) -> Result<f64, EnvError> {
    if rewards.is_empty() {
        return Err(EnvError::InvalidInput("team reward needs at least one agent"));
    }
    Ok(rewards.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Per-agent rewards: the quality reward of each class, or [`PENALTY`] for
/// everyone when any flow's throughput is zero.
pub fn agent_rewards(
    quality: [(f64, f64); 3],
    flow_throughputs: impl IntoIterator<Item = f64>,
) -> Result<[f64; 3], EnvError> {
    if flow_throughputs.into_iter().any(|x| x == 0.0) {
        return Ok([PENALTY; 3]);
    }
    let mut out = [0.0; 3];
    for (o, (pdr, delay)) in out.iter_mut().zip(quality) {
        *o = reward_xqi(pdr, delay)?;
    }
    Ok(out)
}
