//! Threshold-based loopback rate control (Adjust Packet Size).
//!
//! Every window each traffic class's codec rate is scaled by a multiplier
//! chosen from the loss observed in the previous window: quick or soft
//! decrease above the decrease thresholds, increase below the increase
//! threshold, unchanged in between.

use crate::env::{EnvError, RateController, StepOutcome, XrEnv};

/// What the controller compares against its thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApsSignal {
    /// Packet loss ratio `1 − PDR`.
    LossRatio,
    /// The delivery ratio itself.
    DeliveryRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApsThresholds {
    pub l_inc: f64,
    pub l_dec_soft: f64,
    pub l_dec_quick: f64,
    pub alpha_dec_soft: f64,
    pub alpha_dec_quick: f64,
    pub alpha_inc: f64,
    pub signal: ApsSignal,
}

impl Default for ApsThresholds {
    fn default() -> Self {
        Self {
            l_inc: 0.01,
            l_dec_soft: 0.05,
            l_dec_quick: 0.20,
            alpha_dec_soft: 0.9,
            alpha_dec_quick: 0.5,
            alpha_inc: 1.1,
            signal: ApsSignal::LossRatio,
        }
    }
}

impl ApsThresholds {
    pub fn validate(&self) -> Result<(), EnvError> {
        let ordered = 0.0 <= self.l_inc
            && self.l_inc <= self.l_dec_soft
            && self.l_dec_soft < self.l_dec_quick
            && self.l_dec_quick <= 1.0;
        if !ordered {
            return Err(EnvError::Config("need 0 <= l_inc <= l_dec_soft < l_dec_quick <= 1"));
        }
        let mult = 0.0 < self.alpha_dec_quick
            && self.alpha_dec_quick <= self.alpha_dec_soft
            && self.alpha_dec_soft <= 1.0
            && 1.0 <= self.alpha_inc
            && self.alpha_inc.is_finite();
        if !mult {
            return Err(EnvError::Config("need 0 < alpha_dec_quick <= alpha_dec_soft <= 1 <= alpha_inc"));
        }
        Ok(())
    }
}

/// Thresholds plus the rate bounds of one traffic class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApsConfig {
    pub thresholds: ApsThresholds,
    pub a_min: f64,
    pub a_max: f64,
}

impl ApsConfig {
    pub fn new(thresholds: ApsThresholds, a_min: f64, a_max: f64) -> Result<Self, EnvError> {
        thresholds.validate()?;
        if !(a_min.is_finite() && a_max.is_finite() && 0.0 < a_min && a_min <= a_max) {
            return Err(EnvError::Config("need 0 < a_min <= a_max"));
        }
        Ok(Self {
            thresholds,
            a_min,
            a_max,
        })
    }
}

/// Next codec rate from the observed loss-like signal `p` and the current
/// rate. The output is continuous and stays within the class bounds.
pub fn aps_step(p: f64, a_prev: f64, cfg: &ApsConfig) -> Result<f64, EnvError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EnvError::InvalidInput("APS signal must lie in [0, 1]"));
    }
    if !(cfg.a_min..=cfg.a_max).contains(&a_prev) {
        return Err(EnvError::RateOutOfBounds {
            rate: a_prev,
            min: cfg.a_min,
            max: cfg.a_max,
        });
    }
    let t = &cfg.thresholds;
    let next = if t.l_dec_soft < p && p < t.l_dec_quick {
        (a_prev * t.alpha_dec_soft).max(cfg.a_min)
    } else if p >= t.l_dec_quick {
        (a_prev * t.alpha_dec_quick).max(cfg.a_min)
    } else if p < t.l_inc {
        (a_prev * t.alpha_inc).min(cfg.a_max)
    } else {
        a_prev
    };
    Ok(next)
}

/// APS applied independently to every traffic class, starting each episode
/// from the middle of the class's rate range.
#[derive(Debug, Clone, PartialEq)]
pub struct ApsController {
    configs: [ApsConfig; 3],
    rates: [f64; 3],
}

impl ApsController {
    pub fn new(thresholds: ApsThresholds, env: &XrEnv) -> Result<Self, EnvError> {
        let flows = &env.config().flows;
        let mut configs = [ApsConfig {
            thresholds,
            a_min: 1.0,
            a_max: 1.0,
        }; 3];
        for (c, f) in configs.iter_mut().zip(flows) {
            *c = ApsConfig::new(thresholds, f.min_rate_mbps, f.max_rate_mbps)?;
        }
        Ok(Self {
            rates: env.initial_rates(),
            configs,
        })
    }

    pub fn rates(&self) -> [f64; 3] {
        self.rates
    }

    fn initial(&self) -> [f64; 3] {
        self.configs.map(|c| 0.5 * (c.a_min + c.a_max))
    }
}

impl RateController for ApsController {
    fn name(&self) -> &str {
        "aps"
    }

    fn reset(&mut self) {
        self.rates = self.initial();
    }

    fn next_rates(&mut self, _env: &XrEnv, last: Option<&StepOutcome>) -> Result<[f64; 3], EnvError> {
        let Some(out) = last else {
            self.rates = self.initial();
            return Ok(self.rates);
        };
        for i in 0..3 {
            let pdr = out.kpi.types[i].pdr;
            let p = match self.configs[i].thresholds.signal {
                ApsSignal::LossRatio => 1.0 - pdr,
                ApsSignal::DeliveryRatio => pdr,
            };
            self.rates[i] = aps_step(p.clamp(0.0, 1.0), self.rates[i], &self.configs[i])?;
        }
        Ok(self.rates)
    }
}
