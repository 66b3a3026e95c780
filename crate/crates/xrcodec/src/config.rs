//! Flat key-value experiment configuration.
//!
//! Every key is optional and defaults to the reference setting; unknown keys
//! are rejected. See `README.md` for the schema.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use xrcodec_core::baselines::{ApsSignal, ApsThresholds};
use xrcodec_core::env::{FlowSpec, LinkConfig, Ring, ScenarioConfig, TrafficKind};
use xrcodec_core::marl::{Hyperparams, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Oqmix,
    Qmix,
    Aps,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Oqmix, Algorithm::Qmix, Algorithm::Aps];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oqmix => "oqmix",
            Algorithm::Qmix => "qmix",
            Algorithm::Aps => "aps",
        }
    }

    /// Learning mode, `None` for the rule-based baseline.
    pub fn mode(self) -> Option<Mode> {
        match self {
            Algorithm::Oqmix => Some(Mode::Oqmix),
            Algorithm::Qmix => Some(Mode::Qmix),
            Algorithm::Aps => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oqmix" => Ok(Algorithm::Oqmix),
            "qmix" => Ok(Algorithm::Qmix),
            "aps" => Ok(Algorithm::Aps),
            other => bail!("unknown algorithm `{other}` (expected oqmix, qmix or aps)"),
        }
    }
}

/// The three UE distance rings around the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingName {
    Near,
    Mid,
    Far,
}

impl RingName {
    pub const ALL: [RingName; 3] = [RingName::Near, RingName::Mid, RingName::Far];

    pub fn name(self) -> &'static str {
        match self {
            RingName::Near => "near",
            RingName::Mid => "mid",
            RingName::Far => "far",
        }
    }

    pub fn ring(self) -> Ring {
        match self {
            RingName::Near => Ring::NEAR,
            RingName::Mid => Ring::MID,
            RingName::Far => Ring::FAR,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Axis label in meters.
    pub fn label(self) -> String {
        let r = self.ring();
        format!("{}-{} m", r.inner, r.outer)
    }
}

impl fmt::Display for RingName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RingName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "near" | "100-200" => Ok(RingName::Near),
            "mid" | "200-300" => Ok(RingName::Mid),
            "far" | "300-400" => Ok(RingName::Far),
            other => bail!("unknown ring `{other}` (expected near, mid or far)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApsSignalName {
    Loss,
    Delivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub ring: RingName,
    pub seeds: Vec<u64>,
    /// Training episodes for the learners; episodes played by APS.
    pub episodes: u64,
    /// Greedy evaluation episodes after training (learners only).
    pub eval_episodes: u64,
    pub out_dir: PathBuf,
    pub checkpoint: bool,

    // scenario
    pub windows_per_episode: usize,
    pub window_s: f64,
    pub buffer_capacity_bytes: u64,
    pub delay_budget_ms: f64,
    pub mtu_bytes: u32,
    pub ingress_rate_bps: f64,

    // link
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub bs_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
    pub ue_speed_mps: f64,
    pub ue_height_m: f64,
    pub antenna_gain_db: f64,
    pub se_cap: f64,
    pub shadowing_sigma_db: f64,
    pub shadow_decorrelation_m: f64,

    // traffic
    pub fps: f64,
    pub size_jitter: f64,
    pub jitter_truncation: f64,
    pub ar_flows: usize,
    pub ar_min_rate_mbps: f64,
    pub ar_max_rate_mbps: f64,
    pub vr_flows: usize,
    pub vr_min_rate_mbps: f64,
    pub vr_max_rate_mbps: f64,
    pub cg_flows: usize,
    pub cg_min_rate_mbps: f64,
    pub cg_max_rate_mbps: f64,

    // learner
    pub gamma: f64,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_anneal_steps: u64,
    pub alpha: f64,
    pub target_update_period: u64,
    pub max_env_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actions: usize,
    pub agent_hidden: usize,
    pub mixer_embed: usize,
    pub hyper_hidden: usize,
    /// Gradient-norm limit; 0 disables clipping.
    pub grad_clip: f64,

    // APS
    pub aps_l_inc: f64,
    pub aps_l_dec_soft: f64,
    pub aps_l_dec_quick: f64,
    pub aps_alpha_dec_soft: f64,
    pub aps_alpha_dec_quick: f64,
    pub aps_alpha_inc: f64,
    pub aps_signal: ApsSignalName,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        let l = LinkConfig::default();
        let [ar, vr, cg] = FlowSpec::defaults();
        let h = Hyperparams::default();
        let a = ApsThresholds::default();
        Self {
            algorithm: Algorithm::Oqmix,
            ring: RingName::Near,
            seeds: (0..10).collect(),
            episodes: 500,
            eval_episodes: 20,
            out_dir: PathBuf::from("runs"),
            checkpoint: true,

            windows_per_episode: s.windows_per_episode,
            window_s: s.window_s,
            buffer_capacity_bytes: s.buffer_capacity_bytes,
            delay_budget_ms: s.delay_budget_ms,
            mtu_bytes: s.mtu_bytes,
            ingress_rate_bps: s.ingress_rate_bps,

            carrier_ghz: l.carrier_ghz,
            bandwidth_hz: l.bandwidth_hz,
            tx_power_dbm: l.tx_power_dbm,
            bs_noise_figure_db: l.bs_noise_figure_db,
            ue_noise_figure_db: l.ue_noise_figure_db,
            ue_speed_mps: l.ue_speed_mps,
            ue_height_m: l.ue_height_m,
            antenna_gain_db: l.antenna_gain_db,
            se_cap: l.se_cap,
            shadowing_sigma_db: l.shadowing_sigma_db,
            shadow_decorrelation_m: l.shadow_decorrelation_m,

            fps: ar.fps,
            size_jitter: ar.size_jitter,
            jitter_truncation: ar.jitter_truncation,
            ar_flows: ar.flows,
            ar_min_rate_mbps: ar.min_rate_mbps,
            ar_max_rate_mbps: ar.max_rate_mbps,
            vr_flows: vr.flows,
            vr_min_rate_mbps: vr.min_rate_mbps,
            vr_max_rate_mbps: vr.max_rate_mbps,
            cg_flows: cg.flows,
            cg_min_rate_mbps: cg.min_rate_mbps,
            cg_max_rate_mbps: cg.max_rate_mbps,

            gamma: h.gamma,
            learning_rate: h.learning_rate,
            rms_decay: h.rms_decay,
            rms_epsilon: h.rms_epsilon,
            epsilon_start: h.epsilon_start,
            epsilon_end: h.epsilon_end,
            epsilon_anneal_steps: h.epsilon_anneal_steps,
            alpha: h.alpha,
            target_update_period: h.target_update_period,
            max_env_steps: h.max_env_steps,
            batch_size: h.batch_size,
            buffer_capacity: h.buffer_capacity,
            actions: h.actions,
            agent_hidden: h.agent_hidden,
            mixer_embed: h.mixer_embed,
            hyper_hidden: h.hyper_hidden,
            grad_clip: h.grad_clip.unwrap_or(0.0),

            aps_l_inc: a.l_inc,
            aps_l_dec_soft: a.l_dec_soft,
            aps_l_dec_quick: a.l_dec_quick,
            aps_alpha_dec_soft: a.alpha_dec_soft,
            aps_alpha_dec_quick: a.alpha_dec_quick,
            aps_alpha_inc: a.alpha_inc,
            aps_signal: ApsSignalName::Loss,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid experiment configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Checks every derived core configuration.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("`seeds` must name at least one seed");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("`seeds` contains duplicates");
        }
        if self.episodes == 0 {
            bail!("`episodes` must be positive");
        }
        self.scenario(self.seeds[0]).validate().context("scenario settings")?;
        if self.algorithm.mode().is_some() {
            self.hyperparams(Mode::Oqmix).validate().context("learner settings")?;
            if self.eval_episodes == 0 {
                bail!("`eval_episodes` must be positive for learning algorithms");
            }
        }
        self.aps_thresholds().validate().context("APS settings")?;
        if !(self.grad_clip >= 0.0 && self.grad_clip.is_finite()) {
            bail!("`grad_clip` must be finite and non-negative");
        }
        Ok(())
    }

    pub fn link(&self) -> LinkConfig {
        LinkConfig {
            carrier_ghz: self.carrier_ghz,
            bandwidth_hz: self.bandwidth_hz,
            tx_power_dbm: self.tx_power_dbm,
            bs_noise_figure_db: self.bs_noise_figure_db,
            ue_noise_figure_db: self.ue_noise_figure_db,
            ue_speed_mps: self.ue_speed_mps,
            ue_height_m: self.ue_height_m,
            antenna_gain_db: self.antenna_gain_db,
            se_cap: self.se_cap,
            shadowing_sigma_db: self.shadowing_sigma_db,
            shadow_decorrelation_m: self.shadow_decorrelation_m,
        }
    }

    pub fn flows(&self) -> [FlowSpec; 3] {
        let spec = |kind, flows, min_rate_mbps, max_rate_mbps| FlowSpec {
            kind,
            flows,
            fps: self.fps,
            min_rate_mbps,
            max_rate_mbps,
            size_jitter: self.size_jitter,
            jitter_truncation: self.jitter_truncation,
        };
        [
            spec(TrafficKind::Ar, self.ar_flows, self.ar_min_rate_mbps, self.ar_max_rate_mbps),
            spec(TrafficKind::Vr, self.vr_flows, self.vr_min_rate_mbps, self.vr_max_rate_mbps),
            spec(TrafficKind::Cg, self.cg_flows, self.cg_min_rate_mbps, self.cg_max_rate_mbps),
        ]
    }

    pub fn scenario(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            ring: self.ring.ring(),
            window_s: self.window_s,
            windows_per_episode: self.windows_per_episode,
            seed,
            link: self.link(),
            flows: self.flows(),
            buffer_capacity_bytes: self.buffer_capacity_bytes,
            delay_budget_ms: self.delay_budget_ms,
            mtu_bytes: self.mtu_bytes,
            ingress_rate_bps: self.ingress_rate_bps,
        }
    }

    pub fn hyperparams(&self, mode: Mode) -> Hyperparams {
        Hyperparams {
            mode,
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            rms_decay: self.rms_decay,
            rms_epsilon: self.rms_epsilon,
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            epsilon_anneal_steps: self.epsilon_anneal_steps,
            alpha: self.alpha,
            target_update_period: self.target_update_period,
            max_env_steps: self.max_env_steps,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            actions: self.actions,
            agent_hidden: self.agent_hidden,
            mixer_embed: self.mixer_embed,
            hyper_hidden: self.hyper_hidden,
            grad_clip: (self.grad_clip > 0.0).then_some(self.grad_clip),
        }
    }

    pub fn aps_thresholds(&self) -> ApsThresholds {
        ApsThresholds {
            l_inc: self.aps_l_inc,
            l_dec_soft: self.aps_l_dec_soft,
            l_dec_quick: self.aps_l_dec_quick,
            alpha_dec_soft: self.aps_alpha_dec_soft,
            alpha_dec_quick: self.aps_alpha_dec_quick,
            alpha_inc: self.aps_alpha_inc,
            signal: match self.aps_signal {
                ApsSignalName::Loss => ApsSignal::LossRatio,
                ApsSignalName::Delivery => ApsSignal::DeliveryRatio,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_core_defaults() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hyperparams(Mode::Oqmix), Hyperparams::default());
        assert_eq!(c.link(), LinkConfig::default());
        assert_eq!(c.flows(), FlowSpec::defaults());
        assert_eq!(c.aps_thresholds(), ApsThresholds::default());
        assert_eq!(c.scenario(0), ScenarioConfig::default());
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_and_round_trip() {
        let c = ExperimentConfig::from_toml_str(
            "algorithm = \"aps\"\nring = \"far\"\nseeds = [3, 4]\nalpha = 0.5\ngrad_clip = 0\naps_signal = \"delivery\"\n",
        )
        .unwrap();
        assert_eq!(c.algorithm, Algorithm::Aps);
        assert_eq!(c.ring, RingName::Far);
        assert_eq!(c.seeds, [3, 4]);
        assert_eq!(c.hyperparams(Mode::Qmix).grad_clip, None);
        assert_eq!(c.aps_thresholds().signal, ApsSignal::DeliveryRatio);
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = ExperimentConfig::from_toml_str("learning_rat = 0.1").unwrap_err();
        assert!(format!("{err:#}").contains("learning_rat"));
        assert!(ExperimentConfig::from_toml_str("algorithm = \"dqn\"").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = [1, 1]").is_err());
        assert!(ExperimentConfig::from_toml_str("alpha = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("vr_min_rate_mbps = 40").is_err());
        assert!(ExperimentConfig::from_toml_str("aps_l_dec_soft = 0.5").is_err());
    }

    #[test]
    fn names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        for r in RingName::ALL {
            assert_eq!(r.name().parse::<RingName>().unwrap(), r);
        }
        assert_eq!("300-400".parse::<RingName>().unwrap(), RingName::Far);
    }
}
