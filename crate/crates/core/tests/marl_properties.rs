use proptest::prelude::*;
use rand::Rng;
use xrcodec_core::marl::{
    buffer_range, optimistic_weight, select_action, DisabledActionTable, Episode, EpisodeBatch, Hyperparams,
    Learner, MixerNet, Mode, Trainer, XrTeamEnv, BUFFER_RANGES,
};
use xrcodec_core::env::ScenarioConfig;
use xrcodec_core::nn::{flatten, Parameters};

fn small_hp(mode: Mode) -> Hyperparams {
    Hyperparams {
        mode,
        actions: 3,
        agent_hidden: 6,
        mixer_embed: 4,
        hyper_hidden: 5,
        batch_size: 2,
        buffer_capacity: 8,
        ..Hyperparams::default()
    }
}

fn random_episode<R: Rng>(rng: &mut R, len: usize, terminal: bool) -> Episode {
    let obs = |rng: &mut R| (0..2).map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect()).collect::<Vec<Vec<f64>>>();
    let state = |rng: &mut R| (0..3).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>();
    let mut e = Episode::new(&obs(rng), &state(rng), &[0, 0]).unwrap();
    for t in 0..len {
        let a = [rng.random_range(0..3), rng.random_range(0..3)];
        e.push(&a, rng.random_range(-1.0..1.0), terminal && t + 1 == len, &obs(rng), &state(rng), &[0, 0])
            .unwrap();
    }
    e
}

#[test]
fn mixer_is_monotone_on_thousand_probes() {
    let mut rng = xrcodec_core::seeded_rng(11);
    let mut mixer = MixerNet::new(3, 20, 32, 64, &mut rng);
    let mut worst = f64::INFINITY;
    for probe in 0..1000 {
        if probe % 100 == 0 {
            // fresh, deliberately large parameters
            mixer.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v = rng.random_range(-2.0..2.0)));
        }
        let s: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..2.0)).collect();
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let base = mixer.mix(&q, &s).unwrap();
        for a in 0..3 {
            let mut bumped = q.clone();
            bumped[a] += 1e-3;
            worst = worst.min(mixer.mix(&bumped, &s).unwrap() - base);
        }
    }
    assert!(worst >= -1e-9, "worst decrease {worst}");
}

#[test]
fn uniform_exploration_over_enabled_actions() {
    let mut rng = xrcodec_core::seeded_rng(5);
    let disabled = 0b0010_0101u64; // 3 of 8 disabled
    let draws = 10_000;
    let mut counts = [0u32; 8];
    for _ in 0..draws {
        counts[select_action(&[0.0; 8], 1.0, disabled, &mut rng).unwrap()] += 1;
    }
    let p = 1.0 / 5.0;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (a, &c) in counts.iter().enumerate() {
        if disabled >> a & 1 == 1 {
            assert_eq!(c, 0);
        } else {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "action {a}: {c}");
        }
    }
}

#[test]
fn padded_steps_contribute_no_gradient() {
    let mut rng = xrcodec_core::seeded_rng(6);
    let learner = Learner::new(2, 2, 3, small_hp(Mode::Oqmix), &mut rng).unwrap();
    let short = random_episode(&mut rng, 2, true);
    let long = random_episode(&mut rng, 5, false);
    let batch = EpisodeBatch::from_episodes(&[&short, &long]).unwrap();
    let mut scrambled = batch.clone();
    let (rows, n, o, s) = (batch.rows, batch.agents, batch.obs_len, batch.state_len);
    // row 0 holds the short episode: its data past t = 2 is padding
    for t in 3..=batch.steps {
        for a in 0..n {
            let at = (t * rows) * n + a;
            scrambled.obs[at * o..(at + 1) * o].iter_mut().for_each(|v| *v = 123.0);
        }
        scrambled.states[t * rows * s..(t * rows + 1) * s].iter_mut().for_each(|v| *v = -7.0);
    }
    for t in 2..batch.steps {
        scrambled.rewards[t * rows] = 99.0;
        scrambled.actions[(t * rows) * n] = 2;
    }
    let (l1, g1) = learner.loss_and_gradient(&batch).unwrap();
    let (l2, g2) = learner.loss_and_gradient(&scrambled).unwrap();
    assert_eq!(l1.loss, l2.loss);
    assert_eq!(flatten(&g1), flatten(&g2));
}

#[test]
fn overfits_a_single_episode() {
    let mut rng = xrcodec_core::seeded_rng(7);
    let hp = Hyperparams {
        target_update_period: 10_000,
        ..small_hp(Mode::Oqmix)
    };
    let mut learner = Learner::new(2, 2, 3, hp, &mut rng).unwrap();
    let ep = random_episode(&mut rng, 4, true);
    let batch = EpisodeBatch::from_episodes(&[&ep, &ep]).unwrap();
    let first = learner.loss(&batch).unwrap().loss;
    for _ in 0..50 {
        learner.train_step(&batch).unwrap();
    }
    let last = learner.loss(&batch).unwrap().loss;
    assert!(last < first, "loss {first} -> {last}");
}

#[test]
fn qmix_equals_oqmix_with_unit_alpha() {
    let mut rng = xrcodec_core::seeded_rng(8);
    let mut a = Learner::new(2, 2, 3, small_hp(Mode::Qmix), &mut rng).unwrap();
    let mut b = a.clone();
    b.hp.mode = Mode::Oqmix;
    b.hp.alpha = 1.0;
    let batch = EpisodeBatch::from_episodes(&[&random_episode(&mut rng, 3, true), &random_episode(&mut rng, 2, false)])
        .unwrap();
    for _ in 0..5 {
        let sa = a.train_step(&batch).unwrap();
        let sb = b.train_step(&batch).unwrap();
        assert_eq!(sa.loss, sb.loss);
    }
    assert_eq!(a.online, b.online);
}

#[test]
fn weighting_only_changes_the_weights() {
    // Same networks and batch: the optimistic loss is the plain loss with
    // each squared error scaled by 1 or alpha.
    let mut rng = xrcodec_core::seeded_rng(9);
    let plain = Learner::new(2, 2, 3, small_hp(Mode::Qmix), &mut rng).unwrap();
    let mut opt = plain.clone();
    opt.hp.mode = Mode::Oqmix;
    let batch = EpisodeBatch::from_episodes(&[&random_episode(&mut rng, 3, true), &random_episode(&mut rng, 4, false)])
        .unwrap();
    let rp = plain.loss(&batch).unwrap();
    let ro = opt.loss(&batch).unwrap();
    assert_eq!(rp.q_tot, ro.q_tot);
    assert_eq!(rp.targets, ro.targets);
    let valid: f64 = batch.mask.iter().sum();
    let mut expected = 0.0;
    for i in 0..rp.q_tot.len() {
        let w = if rp.q_tot[i] < rp.targets[i] { 1.0 } else { 0.1 };
        assert_eq!(ro.weights[i], w);
        assert_eq!(rp.weights[i], 1.0);
        expected += batch.mask[i] * w * (rp.q_tot[i] - rp.targets[i]).powi(2);
    }
    assert!((ro.loss - expected / valid).abs() < 1e-12);
}

#[test]
fn weighted_loss_arithmetic() {
    // one valid step, w = 0.1, error 2 -> 0.4
    let err: f64 = 2.0;
    assert!((optimistic_weight(3.0, 1.0, Mode::Oqmix, 0.1) * err * err - 0.4).abs() < 1e-12);
}

#[test]
fn td_targets_match_hand_computation() {
    let mut rng = xrcodec_core::seeded_rng(10);
    let hp = Hyperparams {
        mode: Mode::Oqmix,
        actions: 3,
        agent_hidden: 2,
        mixer_embed: 1,
        hyper_hidden: 2,
        batch_size: 1,
        buffer_capacity: 4,
        ..Hyperparams::default()
    };
    let mut learner = Learner::new(2, 1, 1, hp, &mut rng).unwrap();
    let zero = |p: &mut dyn Parameters| p.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v = 0.0));
    zero(&mut learner.online);
    zero(&mut learner.target);
    // Constant Q-vectors: evaluation (1, 3, 2), target (10, 20, 30).
    for (net, c) in learner.online.agents.iter_mut().zip([[1.0, 3.0, 2.0]; 2]) {
        net.head.bias.copy_from_slice(&c);
    }
    for (net, c) in learner.target.agents.iter_mut().zip([[10.0, 20.0, 30.0]; 2]) {
        net.head.bias.copy_from_slice(&c);
    }
    // Target mixer: 2·elu(0.5·q0 + 0.25·q1 + 1) − 1 (weights via output biases).
    let m = &mut learner.target.mixer;
    m.hyper_w1.out.bias.copy_from_slice(&[-0.5, 0.25]);
    m.hyper_b1.bias[0] = 1.0;
    m.hyper_w2.out.bias[0] = 2.0;
    m.hyper_b2.out.bias[0] = -1.0;

    // Action 1 is disabled at the second step for agent 0 only.
    let mut ep = Episode::new(&[vec![0.0], vec![0.0]], &[0.0], &[0, 0]).unwrap();
    ep.push(&[0, 0], 0.5, false, &[vec![0.0], vec![0.0]], &[0.0], &[0b010, 0]).unwrap();
    ep.push(&[2, 1], -1.0, true, &[vec![0.0], vec![0.0]], &[0.0], &[0, 0]).unwrap();
    let batch = EpisodeBatch::from_episodes(&[&ep]).unwrap();
    let report = learner.loss(&batch).unwrap();
    // step 0: agent 0 picks 2 (1 disabled) -> 30, agent 1 picks 1 -> 20
    let q_next = 2.0 * (0.5 * 30.0 + 0.25 * 20.0 + 1.0) - 1.0;
    assert!((report.targets[0] - (0.5 + 0.99 * q_next)).abs() < 1e-12);
    // terminal step: no bootstrap
    assert_eq!(report.targets[1], -1.0);

    learner.hp.gamma = 0.0;
    let report = learner.loss(&batch).unwrap();
    assert_eq!(report.targets, [0.5, -1.0]);
}

#[test]
fn only_oqmix_grows_the_disabled_table() {
    // No usable link: every episode ends with a done event in its first window.
    let mut scenario = ScenarioConfig::default();
    scenario.link.antenna_gain_db = -120.0;
    for mode in [Mode::Qmix, Mode::Oqmix] {
        let hp = Hyperparams { actions: 8, ..small_hp(mode) };
        let env = XrTeamEnv::new(scenario.clone(), hp.actions).unwrap();
        let mut trainer = Trainer::new(env, hp, 1).unwrap();
        let mut updates = 0;
        for _ in 0..5 {
            let r = trainer.train_episode().unwrap();
            assert!(!r.success);
            updates += r.table_updates;
        }
        let disabled = trainer.table.raw_masks().iter().map(|m| m.count_ones()).sum::<u32>();
        match mode {
            Mode::Qmix => assert_eq!((updates, disabled), (0, 0)),
            Mode::Oqmix => assert!(updates > 0 && disabled > 0),
        }
    }
}

proptest! {
    #[test]
    fn selection_never_returns_disabled(
        q in proptest::collection::vec(-10.0f64..10.0, 8),
        epsilon in 0.0f64..=1.0,
        disabled in 0u64..255,
        seed in any::<u64>(),
    ) {
        let mut rng = xrcodec_core::seeded_rng(seed);
        let a = select_action(&q, epsilon, disabled, &mut rng).unwrap();
        prop_assert_eq!(disabled >> a & 1, 0);
    }

    #[test]
    fn table_grows_monotonically_and_keeps_one_action(
        updates in proptest::collection::vec((0usize..3, 0usize..BUFFER_RANGES, 0usize..8), 0..200),
    ) {
        let mut t = DisabledActionTable::new(3, 8, BUFFER_RANGES).unwrap();
        for (agent, range, action) in updates {
            let before = t.clone();
            t.update_disabled(agent, range, action);
            prop_assert!(t.contains(&before));
            prop_assert!(t.disabled_count(agent, range) <= 7);
        }
    }

    #[test]
    fn weight_is_one_or_alpha(q in -100.0f64..100.0, y in -100.0f64..100.0, alpha in 0.01f64..=1.0) {
        let w = optimistic_weight(q, y, Mode::Oqmix, alpha);
        prop_assert!(w == 1.0 || w == alpha);
        prop_assert_eq!(optimistic_weight(q, y, Mode::Qmix, alpha), 1.0);
    }

    #[test]
    fn epsilon_stays_in_bounds(step in any::<u32>()) {
        let e = Hyperparams::default().epsilon(step as u64);
        prop_assert!((0.05..=1.0).contains(&e));
    }

    #[test]
    fn buffer_range_is_total(occ in 0.0f64..=1.0) {
        prop_assert!(buffer_range(occ) < BUFFER_RANGES);
    }
}
