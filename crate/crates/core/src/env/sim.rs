use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::kpi::FlowWindowStats;
use super::link::{capacity_bps, shadow_draw, shadow_step};
use super::{
    agent_rewards, generate_frames, packetize, team_reward, xqi_level, EnvError, FlowCounters,
    FlowKpi, FlowSpec, KpiWindow, LinkConfig, QueuedPacket, Ring, RlcBuffer, TrafficKind, TypeKpi,
    UeMotion,
};

/// Length of one agent's observation vector.
pub const OBS_LEN: usize = 5;

/// What one agent sees after a window: the team's previous codec rates
/// (normalized to each class's range), the RLC buffer occupancy ratio and its
/// own class's packet delivery ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentObservation {
    pub prev_rates: [f64; 3],
    pub buffer_occupancy: f64,
    pub pdr: f64,
}

impl AgentObservation {
    pub fn to_array(&self) -> [f64; OBS_LEN] {
        [
            self.prev_rates[0],
            self.prev_rates[1],
            self.prev_rates[2],
            self.buffer_occupancy,
            self.pdr,
        ]
    }
}

/// Team view used by the mixer: all observations followed by the
/// normalized per-flow throughput vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState(pub Vec<f64>);

impl GlobalState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub ring: Ring,
    pub window_s: f64,
    pub windows_per_episode: usize,
    pub seed: u64,
    pub link: LinkConfig,
    pub flows: [FlowSpec; 3],
    pub buffer_capacity_bytes: u64,
    /// Packets delivered later than this count as lost for PDR.
    pub delay_budget_ms: f64,
    pub mtu_bytes: u32,
    /// Rate at which a frame's packets reach the base station.
    pub ingress_rate_bps: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ring: Ring::NEAR,
            window_s: 0.5,
            windows_per_episode: 20,
            seed: 0,
            link: LinkConfig::default(),
            flows: FlowSpec::defaults(),
            buffer_capacity_bytes: 60_000,
            delay_budget_ms: 20.0,
            mtu_bytes: 1500,
            ingress_rate_bps: 1e9,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        Ring::new(self.ring.inner, self.ring.outer)?;
        self.link.validate()?;
        for (i, f) in self.flows.iter().enumerate() {
            f.validate()?;
            if f.kind.index() != i {
                return Err(EnvError::Config("flow specs must be ordered AR, VR, CG"));
            }
        }
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(EnvError::Config("observation window must be positive"));
        }
        if self.windows_per_episode == 0 {
            return Err(EnvError::Config("an episode needs at least one window"));
        }
        if self.buffer_capacity_bytes == 0 || self.mtu_bytes == 0 {
            return Err(EnvError::Config("buffer capacity and MTU must be positive"));
        }
        if !(self.delay_budget_ms > 0.0) {
            return Err(EnvError::Config("delay budget must be positive"));
        }
        if !(self.ingress_rate_bps > 0.0) {
            return Err(EnvError::Config("ingress rate must be positive"));
        }
        Ok(())
    }
}

/// Result of one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: [AgentObservation; 3],
    pub state: GlobalState,
    pub kpi: KpiWindow,
    pub agent_rewards: [f64; 3],
    pub team_reward: f64,
    /// Some flow delivered nothing during the window.
    pub done: bool,
    /// The window budget of the episode is exhausted.
    pub truncated: bool,
    pub window: usize,
}

#[derive(Debug, Clone, Copy)]
struct FrameState {
    remaining: u32,
    broken: bool,
}

#[derive(Debug, Clone, Copy)]
struct Arrival {
    time: f64,
    flow: usize,
    frame: u64,
    bytes: u32,
}

#[derive(Debug, Clone, Copy)]
struct FlowMeta {
    agent: usize,
}

/// The downlink simulator. Single-threaded; one instance per run.
#[derive(Debug, Clone)]
pub struct XrEnv {
    config: ScenarioConfig,
    rng: crate::SimRng,
    flows: Vec<FlowMeta>,
    ues: Vec<UeMotion>,
    shadows: [f64; 3],
    phases: Vec<f64>,
    buffer: RlcBuffer,
    /// Bits still to send of each lane's head packet.
    hol_remaining_bits: [Option<f64>; 3],
    pending: Vec<Arrival>,
    frames: BTreeMap<u64, FrameState>,
    next_frame: u64,
    counters: Vec<FlowCounters>,
    time: f64,
    window: usize,
    prev_rates: [f64; 3],
    stats: Vec<FlowWindowStats>,
    occupancy_integral: f64,
}

impl XrEnv {
    pub fn new(config: ScenarioConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let flows: Vec<FlowMeta> = config
            .flows
            .iter()
            .flat_map(|spec| (0..spec.flows).map(move |_| FlowMeta { agent: spec.kind.index() }))
            .collect();
        let n = flows.len();
        let mut env = Self {
            rng: crate::seeded_rng(config.seed),
            buffer: RlcBuffer::with_lanes(config.buffer_capacity_bytes, 3),
            flows,
            ues: Vec::new(),
            shadows: [0.0; 3],
            phases: vec![0.0; n],
            hol_remaining_bits: [None; 3],
            pending: Vec::new(),
            frames: BTreeMap::new(),
            next_frame: 0,
            counters: vec![FlowCounters::default(); n],
            time: 0.0,
            window: 0,
            prev_rates: [0.0; 3],
            stats: vec![FlowWindowStats::default(); n],
            occupancy_integral: 0.0,
            config,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    /// `ar0, ar1, ar2, vr, cg` for the default scenario.
    pub fn flow_labels(&self) -> Vec<alloc::string::String> {
        use alloc::format;
        let mut out = Vec::new();
        for spec in &self.config.flows {
            for j in 0..spec.flows {
                if spec.flows == 1 {
                    out.push(spec.kind.name().into());
                } else {
                    out.push(format!("{}{}", spec.kind.name(), j));
                }
            }
        }
        out
    }

    /// Agent (traffic class) each flow belongs to.
    pub fn flow_agent(&self, flow: usize) -> usize {
        self.flows[flow].agent
    }

    /// Cumulative per-flow accounting since the last reset.
    pub fn counters(&self) -> &[FlowCounters] {
        &self.counters
    }

    /// Packets of each flow currently held in the RLC buffer.
    pub fn queued_per_flow(&self) -> Vec<u64> {
        let mut q = vec![0; self.flows.len()];
        for p in self.buffer.iter() {
            q[p.flow] += 1;
        }
        q
    }

    pub fn ue_distances(&self) -> [f64; 3] {
        [self.ues[0].distance(), self.ues[1].distance(), self.ues[2].distance()]
    }

    pub fn window_index(&self) -> usize {
        self.window
    }

    /// Middle of each class's rate range; the codec setting before the first
    /// decision of an episode.
    pub fn initial_rates(&self) -> [f64; 3] {
        let mut r = [0.0; 3];
        for (o, f) in r.iter_mut().zip(&self.config.flows) {
            *o = 0.5 * (f.min_rate_mbps + f.max_rate_mbps);
        }
        r
    }

    /// Starts a new episode: fresh positions, shadowing and frame phases, an
    /// empty buffer. The random stream continues from the previous episode.
    pub fn reset(&mut self) -> ([AgentObservation; 3], GlobalState) {
        let ring = self.config.ring;
        self.ues = (0..3).map(|_| UeMotion::spawn(&ring, &mut self.rng)).collect();
        for s in self.shadows.iter_mut() {
            *s = shadow_draw(self.config.link.shadowing_sigma_db, &mut self.rng);
        }
        for (flow, phase) in self.flows.iter().zip(self.phases.iter_mut()) {
            let period = 1.0 / self.config.flows[flow.agent].fps;
            *phase = self.rng.random_range(0.0..period);
        }
        self.buffer.clear();
        self.hol_remaining_bits = [None; 3];
        self.pending.clear();
        self.frames.clear();
        self.counters.iter_mut().for_each(|c| *c = FlowCounters::default());
        self.time = 0.0;
        self.window = 0;
        self.prev_rates = self.initial_rates();
        let obs = self.observations(0.0, [1.0; 3]);
        let state = self.global_state(&obs, &vec![0.0; self.flows.len()]);
        (obs, state)
    }

    /// Link rate (bit/s) of every UE for the coming window.
    fn link_rates(&self) -> Result<[f64; 3], EnvError> {
        let mut r = [0.0; 3];
        for (ue, o) in r.iter_mut().enumerate() {
            *o = capacity_bps(&self.config.link, self.ues[ue].distance(), self.shadows[ue])?;
        }
        Ok(r)
    }

    /// Plays one observation window at the given class-level codec rates.
    /// Rates are clamped into each class's bounds.
    pub fn step_window(&mut self, rates_mbps: [f64; 3]) -> Result<StepOutcome, EnvError> {
        let link = self.link_rates()?;
        self.step_with_link_rates(rates_mbps, link)
    }

    /// Like [`XrEnv::step_window`] but with externally imposed per-UE link
    /// rates in bit/s (mobility and shadowing still advance).
    pub fn step_with_link_rates(
        &mut self,
        rates_mbps: [f64; 3],
        link_bps: [f64; 3],
    ) -> Result<StepOutcome, EnvError> {
        let rates = self.clamp_rates(rates_mbps);
        let t0 = self.time;
        let tw = self.config.window_s;
        let t1 = t0 + tw;
        for s in self.stats.iter_mut() {
            *s = FlowWindowStats::default();
        }
        self.occupancy_integral = 0.0;

        let mut arrivals = core::mem::take(&mut self.pending);
        self.generate_arrivals(&rates, t0, &mut arrivals)?;
        arrivals.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.flow.cmp(&b.flow)));
        let split = arrivals.partition_point(|a| a.time < t1);
        self.pending = arrivals.split_off(split);

        let mut now = t0;
        for a in &arrivals {
            now = self.serve_until(now, a.time, &link_bps);
            self.admit(a);
        }
        self.serve_until(now, t1, &link_bps);

        let queued = self.queued_per_flow();
        for (s, q) in self.stats.iter_mut().zip(&queued) {
            s.pending_at_end = *q;
        }
        let kpi = self.build_kpi(&rates, &link_bps)?;

        let quality = [0, 1, 2].map(|i| (kpi.types[i].pdr * 100.0, kpi.types[i].mean_delay_ms));
        let quality = self.quality_inputs(quality);
        let agent_rewards = agent_rewards(quality, kpi.flow_throughputs())?;
        let team = team_reward(&agent_rewards)?;
        let done = kpi.flow_throughputs().any(|x| x == 0.0);

        self.advance_mobility();
        self.time = t1;
        self.window += 1;
        self.prev_rates = rates;

        let pdrs = [kpi.types[0].pdr, kpi.types[1].pdr, kpi.types[2].pdr];
        let observations = self.observations(kpi.buffer_occupancy, pdrs);
        let thr: Vec<f64> = kpi.flow_throughputs().collect();
        let state = self.global_state(&observations, &thr);
        Ok(StepOutcome {
            observations,
            state,
            kpi,
            agent_rewards,
            team_reward: team,
            done,
            truncated: !done && self.window >= self.config.windows_per_episode,
            window: self.window - 1,
        })
    }

    /// Uses the exact counts for the PDR percentage so that boundaries such
    /// as 99 % are not lost to rounding.
    fn quality_inputs(&self, approx: [(f64, f64); 3]) -> [(f64, f64); 3] {
        let mut out = approx;
        for (agent, o) in out.iter_mut().enumerate() {
            let members: Vec<&FlowWindowStats> = self
                .flows
                .iter()
                .zip(&self.stats)
                .filter(|(m, _)| m.agent == agent)
                .map(|(_, s)| s)
                .collect();
            o.0 = FlowWindowStats::merge(&members).pdr_percent();
        }
        out
    }

    fn clamp_rates(&self, rates: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for ((o, r), f) in out.iter_mut().zip(rates).zip(&self.config.flows) {
            *o = if r.is_finite() {
                r.clamp(f.min_rate_mbps, f.max_rate_mbps)
            } else {
                f.min_rate_mbps
            };
        }
        out
    }

    fn generate_arrivals(&mut self, rates: &[f64; 3], t0: f64, out: &mut Vec<Arrival>) -> Result<(), EnvError> {
        let mtu = self.config.mtu_bytes;
        let ingress = self.config.ingress_rate_bps;
        for flow in 0..self.flows.len() {
            let agent = self.flows[flow].agent;
            let spec = &self.config.flows[agent];
            let frames = generate_frames(spec, rates[agent], t0, self.config.window_s, self.phases[flow], &mut self.rng)?;
            for frame in frames {
                let key = self.next_frame;
                self.next_frame += 1;
                let mut offset_bits = 0.0;
                let mut count = 0;
                for bytes in packetize(frame.bytes, mtu) {
                    out.push(Arrival {
                        time: frame.time + offset_bits / ingress,
                        flow,
                        frame: key,
                        bytes,
                    });
                    offset_bits += f64::from(bytes) * 8.0;
                    count += 1;
                }
                self.frames.insert(
                    key,
                    FrameState {
                        remaining: count,
                        broken: false,
                    },
                );
            }
        }
        Ok(())
    }

    fn admit(&mut self, a: &Arrival) {
        self.counters[a.flow].generated += 1;
        self.stats[a.flow].counts.generated += 1;
        let lane = self.flows[a.flow].agent;
        let accepted = self.buffer.try_push_to(lane, QueuedPacket {
            flow: a.flow,
            frame: a.frame,
            bytes: a.bytes,
            arrival: a.time,
        });
        if !accepted {
            self.counters[a.flow].dropped_overflow += 1;
            self.stats[a.flow].counts.dropped_overflow += 1;
            self.resolve_frame(a.frame, true);
        }
    }

    fn resolve_frame(&mut self, frame: u64, broken: bool) -> bool {
        let mut intact = false;
        if let Some(st) = self.frames.get_mut(&frame) {
            st.broken |= broken;
            st.remaining -= 1;
            intact = !st.broken;
            if st.remaining == 0 {
                self.frames.remove(&frame);
            }
        }
        intact
    }

    /// Serves the buffer from `now` to `until`; returns `until`.
    ///
    /// Backlogged UEs with a usable link split the airtime equally and each
    /// sends its lane in arrival order, so a UE in a deep fade only slows
    /// itself down.
    fn serve_until(&mut self, mut now: f64, until: f64, link_bps: &[f64; 3]) -> f64 {
        while now < until {
            let active: Vec<usize> = (0..3)
                .filter(|&ue| link_bps[ue] > 0.0 && self.buffer.front_of(ue).is_some())
                .collect();
            let queued = self.buffer.queued_bytes() as f64;
            if active.is_empty() {
                self.occupancy_integral += queued * (until - now);
                return until;
            }
            let share = active.len() as f64;
            let mut remaining = [0.0; 3];
            let mut next: Option<(usize, f64)> = None;
            for &ue in &active {
                let head = self.buffer.front_of(ue).expect("active lane");
                remaining[ue] = self.hol_remaining_bits[ue].unwrap_or(f64::from(head.bytes) * 8.0);
                let need = remaining[ue] * share / link_bps[ue];
                if next.is_none_or(|(_, t)| need < t) {
                    next = Some((ue, need));
                }
            }
            let (done_ue, need) = next.expect("at least one active lane");
            let dt = need.min(until - now);
            self.occupancy_integral += queued * dt;
            for &ue in &active {
                self.hol_remaining_bits[ue] = Some(remaining[ue] - dt * link_bps[ue] / share);
            }
            if now + need <= until {
                now += need;
                self.hol_remaining_bits[done_ue] = None;
                let head = self.buffer.pop_from(done_ue).expect("active lane");
                self.depart(&head, now);
            } else {
                return until;
            }
        }
        until
    }

    fn depart(&mut self, p: &QueuedPacket, at: f64) {
        let delay_ms = (at - p.arrival) * 1e3;
        let on_time = delay_ms <= self.config.delay_budget_ms;
        let bits = f64::from(p.bytes) * 8.0;
        let intact = self.resolve_frame(p.frame, !on_time);
        let s = &mut self.stats[p.flow];
        s.delivered_bits += bits;
        s.delays_ms.push(delay_ms);
        if on_time {
            s.counts.delivered_on_time += 1;
            self.counters[p.flow].delivered_on_time += 1;
            if intact {
                s.goodput_bits += bits;
            }
        } else {
            s.counts.delivered_late += 1;
            self.counters[p.flow].delivered_late += 1;
        }
    }

    fn build_kpi(&self, rates: &[f64; 3], link_bps: &[f64; 3]) -> Result<KpiWindow, EnvError> {
        let tw = self.config.window_s;
        let window_ms = tw * 1e3;
        let flows: Vec<FlowKpi> = self
            .stats
            .iter()
            .map(|s| {
                let (mean, jitter) = s.delay_stats(window_ms);
                FlowKpi {
                    throughput_mbps: s.delivered_bits / tw / 1e6,
                    goodput_mbps: s.goodput_bits / tw / 1e6,
                    mean_delay_ms: mean,
                    jitter_ms: jitter,
                    pdr: s.pdr(),
                    window: s.counts,
                }
            })
            .collect();
        let mut types = Vec::with_capacity(3);
        for kind in TrafficKind::ALL {
            let members: Vec<&FlowWindowStats> = self
                .flows
                .iter()
                .zip(&self.stats)
                .filter(|(m, _)| m.agent == kind.index())
                .map(|(_, s)| s)
                .collect();
            let merged = FlowWindowStats::merge(&members);
            let (mean, jitter) = merged.delay_stats(window_ms);
            types.push(TypeKpi {
                throughput_mbps: merged.delivered_bits / tw / 1e6,
                goodput_mbps: merged.goodput_bits / tw / 1e6,
                mean_delay_ms: mean,
                jitter_ms: jitter,
                pdr: merged.pdr(),
                xqi: xqi_level(merged.pdr_percent(), mean)?.level(),
            });
        }
        let types: [TypeKpi; 3] = types.try_into().expect("three traffic classes");
        Ok(KpiWindow {
            flows,
            types,
            buffer_occupancy: (self.occupancy_integral / tw / self.buffer.capacity() as f64).clamp(0.0, 1.0),
            buffer_occupancy_end: self.buffer.occupancy(),
            link_rate_mbps: link_bps.map(|r| r / 1e6),
            rates_mbps: *rates,
        })
    }

    fn advance_mobility(&mut self) {
        let ring = self.config.ring;
        let speed = self.config.link.ue_speed_mps;
        let dt = self.config.window_s;
        for ue in 0..3 {
            let moved = self.ues[ue].advance(&ring, speed, dt, &mut self.rng);
            self.shadows[ue] = shadow_step(&self.config.link, self.shadows[ue], moved, &mut self.rng);
        }
    }

    fn observations(&self, occupancy: f64, pdrs: [f64; 3]) -> [AgentObservation; 3] {
        let mut norm = [0.0; 3];
        for ((n, r), f) in norm.iter_mut().zip(self.prev_rates).zip(&self.config.flows) {
            let span = f.max_rate_mbps - f.min_rate_mbps;
            *n = if span > 0.0 { (r - f.min_rate_mbps) / span } else { 0.0 };
        }
        [0, 1, 2].map(|i| AgentObservation {
            prev_rates: norm,
            buffer_occupancy: occupancy,
            pdr: pdrs[i],
        })
    }

    fn global_state(&self, obs: &[AgentObservation; 3], throughput_mbps: &[f64]) -> GlobalState {
        let mut v = Vec::with_capacity(3 * OBS_LEN + throughput_mbps.len());
        for o in obs {
            v.extend_from_slice(&o.to_array());
        }
        for (flow, thr) in throughput_mbps.iter().enumerate() {
            let spec = &self.config.flows[self.flows[flow].agent];
            v.push(thr / (spec.max_rate_mbps / spec.flows as f64));
        }
        GlobalState(v)
    }

    /// Observations as they stand right after [`XrEnv::reset`].
    pub fn reset_observation(&self) -> [AgentObservation; 3] {
        self.observations(0.0, [1.0; 3])
    }

    /// Length of [`GlobalState`] for this scenario.
    pub fn state_len(&self) -> usize {
        3 * OBS_LEN + self.flows.len()
    }
}
