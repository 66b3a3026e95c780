use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::MarlError;

/// Evenly spaced codec rates `d_min + k·(d_max − d_min)/(K − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecActionGrid {
    pub min: f64,
    pub max: f64,
    levels: Vec<f64>,
}

impl CodecActionGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self, MarlError> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(MarlError::Config("grid needs finite min <= max"));
        }
        if count < 2 {
            return Err(MarlError::Config("grid needs at least two levels"));
        }
        let step = (max - min) / (count - 1) as f64;
        let mut levels: Vec<f64> = (0..count).map(|k| min + k as f64 * step).collect();
        levels[count - 1] = max;
        Ok(Self { min, max, levels })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn rate(&self, action: usize) -> f64 {
        self.levels[action]
    }
}

/// Upper edges of the buffer-occupancy ranges; the last range is `[0.99, 1]`.
pub const BUFFER_RANGE_EDGES: [f64; 4] = [0.96, 0.97, 0.98, 0.99];
pub const BUFFER_RANGES: usize = BUFFER_RANGE_EDGES.len() + 1;

/// Index of the occupancy range containing `occupancy`.
pub fn buffer_range(occupancy: f64) -> usize {
    BUFFER_RANGE_EDGES
        .iter()
        .position(|&edge| occupancy < edge)
        .unwrap_or(BUFFER_RANGES - 1)
}

/// Disabled action sets per (agent, buffer range), stored as bitmasks.
/// Sets only grow and never cover every action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisabledActionTable {
    actions: usize,
    ranges: usize,
    masks: Vec<u64>,
}

impl DisabledActionTable {
    pub fn new(agents: usize, actions: usize, ranges: usize) -> Result<Self, MarlError> {
        if !(2..=64).contains(&actions) {
            return Err(MarlError::Config("action count must lie in 2..=64"));
        }
        if agents == 0 || ranges == 0 {
            return Err(MarlError::Config("table needs agents and ranges"));
        }
        Ok(Self {
            actions,
            ranges,
            masks: vec![0; agents * ranges],
        })
    }

    /// Rebuilds a table from saved masks (agent-major), rejecting masks that
    /// name missing actions or disable everything.
    pub fn from_masks(agents: usize, actions: usize, ranges: usize, masks: &[u64]) -> Result<Self, MarlError> {
        let mut table = Self::new(agents, actions, ranges)?;
        if masks.len() != agents * ranges {
            return Err(MarlError::Config("mask count must be agents x ranges"));
        }
        let all = if actions == 64 { u64::MAX } else { (1u64 << actions) - 1 };
        if masks.iter().any(|m| m & !all != 0 || m.count_ones() as usize >= actions) {
            return Err(MarlError::Config("saved mask is out of range or disables every action"));
        }
        table.masks.copy_from_slice(masks);
        Ok(table)
    }

    pub fn agents(&self) -> usize {
        self.masks.len() / self.ranges
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn ranges(&self) -> usize {
        self.ranges
    }

    pub fn mask(&self, agent: usize, range: usize) -> u64 {
        self.masks[agent * self.ranges + range]
    }

    pub fn is_disabled(&self, agent: usize, range: usize, action: usize) -> bool {
        self.mask(agent, range) >> action & 1 == 1
    }

    pub fn disabled_count(&self, agent: usize, range: usize) -> usize {
        self.mask(agent, range).count_ones() as usize
    }

    pub fn disabled(&self, agent: usize, range: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.mask(agent, range);
        (0..self.actions).filter(move |a| m >> a & 1 == 1)
    }

    /// `true` for every action the agent may take in `range`.
    pub fn enabled(&self, agent: usize, range: usize) -> Vec<bool> {
        (0..self.actions)
            .map(|a| !self.is_disabled(agent, range, a))
            .collect()
    }

    /// Disables `action`, unless that would leave no action enabled.
    /// Returns whether the set changed.
    pub fn update_disabled(&mut self, agent: usize, range: usize, action: usize) -> bool {
        let idx = agent * self.ranges + range;
        let bit = 1u64 << action;
        let m = self.masks[idx];
        if m & bit != 0 || (m.count_ones() as usize) + 1 >= self.actions {
            return false;
        }
        self.masks[idx] = m | bit;
        true
    }

    /// `true` if every set of `self` contains the matching set of `earlier`.
    pub fn contains(&self, earlier: &DisabledActionTable) -> bool {
        self.masks.len() == earlier.masks.len()
            && self.masks.iter().zip(&earlier.masks).all(|(now, then)| now & then == *then)
    }

    pub fn raw_masks(&self) -> &[u64] {
        &self.masks
    }
}

/// Linear decay from `start` to `end` over `anneal_steps`, then flat.
pub fn epsilon_schedule(step: u64, start: f64, end: f64, anneal_steps: u64) -> f64 {
    if step >= anneal_steps {
        return end;
    }
    let frac = step as f64 / anneal_steps as f64;
    (start - (start - end) * frac).max(end)
}

/// Index of the largest Q among enabled actions; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], disabled: u64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (a, &v) in q.iter().enumerate() {
        if disabled >> a & 1 == 1 {
            continue;
        }
        if best.is_none_or(|b| v > q[b]) {
            best = Some(a);
        }
    }
    best
}

/// ε-greedy choice with rejection of disabled actions. The exploration
/// branch draws uniformly over all actions and is redrawn on a disabled pick;
/// the greedy branch only considers enabled actions, so the loop ends.
pub fn select_action<R: Rng + ?Sized>(
    q: &[f64],
    epsilon: f64,
    disabled: u64,
    rng: &mut R,
) -> Result<usize, MarlError> {
    let k = q.len();
    if k == 0 || k > 64 {
        return Err(MarlError::Config("action count must lie in 1..=64"));
    }
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    if disabled & all == all {
        return Err(MarlError::Invariant("every action is disabled"));
    }
    loop {
        let a = if rng.random::<f64>() < epsilon {
            rng.random_range(0..k)
        } else {
            masked_argmax(q, disabled).expect("an enabled action exists")
        };
        if disabled >> a & 1 == 0 {
            return Ok(a);
        }
    }
}
