use proptest::prelude::*;
use rand::Rng;
use xrcodec_core::env::{Ring, ScenarioConfig, XrEnv};

fn scenario(ring: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        ring: Ring::ALL[ring],
        seed,
        ..ScenarioConfig::default()
    }
}

/// Plays one episode with random rates and checks every window.
fn checked_episode(env: &mut XrEnv, rates_seed: u64) -> Vec<u64> {
    let mut rng = xrcodec_core::seeded_rng(rates_seed);
    env.reset();
    let flows = env.config().flows.clone();
    let cap = env.config().buffer_capacity_bytes as f64;
    let mut digest = Vec::new();
    loop {
        let rates = [0, 1, 2].map(|i| rng.random_range(flows[i].min_rate_mbps..=flows[i].max_rate_mbps));
        let out = env.step_window(rates).unwrap();
        let queued = env.queued_per_flow();
        for (f, c) in env.counters().iter().enumerate() {
            assert_eq!(c.generated, c.resolved() + queued[f], "conservation, flow {f}");
        }
        for f in &out.kpi.flows {
            assert!((0.0..=1.0).contains(&f.pdr));
            assert!(f.goodput_mbps <= f.throughput_mbps + 1e-12);
            assert!(f.throughput_mbps >= 0.0 && f.mean_delay_ms >= 0.0 && f.jitter_ms >= 0.0);
            let w = f.window;
            assert!(w.delivered_on_time + w.delivered_late + w.dropped_overflow <= w.generated + 10_000);
        }
        for t in &out.kpi.types {
            assert!((0.0..=1.0).contains(&t.pdr));
            assert!(t.goodput_mbps <= t.throughput_mbps + 1e-12);
            assert!((1..=5).contains(&t.xqi));
        }
        assert!((0.0..=1.0).contains(&out.kpi.buffer_occupancy));
        assert!(out.kpi.buffer_occupancy_end * cap <= cap);
        assert!(out.state.as_slice().iter().all(|v| v.is_finite()));
        for o in &out.observations {
            assert!(o.to_array().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let min_reward = out.agent_rewards.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(out.team_reward, min_reward);
        assert_eq!(out.done, out.kpi.flow_throughputs().any(|t| t == 0.0));
        if out.done {
            assert_eq!(out.team_reward, -1.0);
        }
        digest.push(out.team_reward.to_bits());
        digest.push(out.kpi.buffer_occupancy.to_bits());
        digest.extend(out.kpi.flows.iter().map(|f| f.throughput_mbps.to_bits()));
        if out.done || out.truncated {
            return digest;
        }
    }
}

#[test]
fn hundred_random_episodes_hold_invariants() {
    for i in 0..100u64 {
        let mut env = XrEnv::new(scenario((i % 3) as usize, i)).unwrap();
        checked_episode(&mut env, 1000 + i);
    }
}

#[test]
fn identical_seeds_replay_bit_identically() {
    for i in 0..5u64 {
        let mut a = XrEnv::new(scenario((i % 3) as usize, 77 + i)).unwrap();
        let mut b = XrEnv::new(scenario((i % 3) as usize, 77 + i)).unwrap();
        for ep in 0..4 {
            assert_eq!(checked_episode(&mut a, ep), checked_episode(&mut b, ep));
        }
    }
}

#[test]
fn different_seeds_differ() {
    let mut a = XrEnv::new(scenario(2, 1)).unwrap();
    let mut b = XrEnv::new(scenario(2, 2)).unwrap();
    assert_ne!(checked_episode(&mut a, 0), checked_episode(&mut b, 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_hold_for_any_seed_and_ring(seed in any::<u64>(), ring in 0usize..3, rates_seed in any::<u64>()) {
        let mut env = XrEnv::new(scenario(ring, seed)).unwrap();
        checked_episode(&mut env, rates_seed);
    }

    #[test]
    fn imposed_link_rates_respect_bounds(
        link in proptest::array::uniform3(0.0f64..5e8),
        rates in proptest::array::uniform3(0.0f64..40.0),
        seed in any::<u64>(),
    ) {
        let mut env = XrEnv::new(scenario(0, seed)).unwrap();
        let out = env.step_with_link_rates(rates, link).unwrap();
        let queued = env.queued_per_flow();
        for (f, c) in env.counters().iter().enumerate() {
            prop_assert_eq!(c.generated, c.resolved() + queued[f]);
        }
        for f in &out.kpi.flows {
            prop_assert!((0.0..=1.0).contains(&f.pdr));
            prop_assert!(f.goodput_mbps <= f.throughput_mbps + 1e-12);
        }
        // Nothing can be delivered faster than the link allows.
        let total: f64 = out.kpi.flows.iter().map(|f| f.throughput_mbps).sum();
        let max_link = link.iter().copied().fold(0.0, f64::max) / 1e6;
        prop_assert!(total <= max_link + 1e-6);
    }
}
