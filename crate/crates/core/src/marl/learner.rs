use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::{masked_argmax, optimistic_weight, AgentNet, AgentSeqTape, EpisodeBatch, Hyperparams, MarlError, MixerNet};
use crate::nn::{clip_grad_norm, flatten, load_flat, param_count, zeros_like, OptimizerState, Parameters};

/// All trainable networks of the team: one recurrent Q-network per agent
/// (no sharing) and the mixer.
#[derive(Debug, Clone, PartialEq)]
pub struct QmixNets {
    pub agents: Vec<AgentNet>,
    pub mixer: MixerNet,
}

impl QmixNets {
    pub fn new<R: Rng + ?Sized>(agents: usize, obs_len: usize, state_len: usize, hp: &Hyperparams, rng: &mut R) -> Self {
        Self {
            agents: (0..agents)
                .map(|_| AgentNet::new(obs_len, hp.actions, hp.agent_hidden, rng))
                .collect(),
            mixer: MixerNet::new(agents, state_len, hp.mixer_embed, hp.hyper_hidden, rng),
        }
    }
}

impl Parameters for QmixNets {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.agents.visit(f);
        self.mixer.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.agents.visit_mut(f);
        self.mixer.visit_mut(f);
    }
}

/// Per-step quantities of a loss evaluation, `[t·rows + b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    pub q_tot: Vec<f64>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    pub valid_steps: usize,
}

impl LossReport {
    /// Mean weight over valid steps.
    pub fn mean_weight(&self, mask: &[f64]) -> f64 {
        let n: f64 = mask.iter().sum();
        self.weights.iter().zip(mask).map(|(w, m)| w * m).sum::<f64>() / n.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub mean_weight: f64,
    pub target_updated: bool,
}

/// Evaluation and target networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub hp: Hyperparams,
    pub online: QmixNets,
    pub target: QmixNets,
    pub optimizer: OptimizerState,
    train_steps: u64,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(
        agents: usize,
        obs_len: usize,
        state_len: usize,
        hp: Hyperparams,
        rng: &mut R,
    ) -> Result<Self, MarlError> {
        hp.validate()?;
        let online = QmixNets::new(agents, obs_len, state_len, &hp, rng);
        let optimizer = OptimizerState::new(param_count(&online), hp.learning_rate, hp.rms_decay, hp.rms_epsilon)?;
        Ok(Self {
            target: online.clone(),
            online,
            optimizer,
            hp,
            train_steps: 0,
        })
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// Restores a learner from saved parts (checkpoint loading).
    pub fn from_parts(
        hp: Hyperparams,
        online: QmixNets,
        target: QmixNets,
        optimizer: OptimizerState,
        train_steps: u64,
    ) -> Result<Self, MarlError> {
        hp.validate()?;
        let n = param_count(&online);
        if param_count(&target) != n || optimizer.accumulator.len() != n {
            return Err(MarlError::Config("checkpoint parts disagree in size"));
        }
        Ok(Self {
            hp,
            online,
            target,
            optimizer,
            train_steps,
        })
    }

    pub fn hard_update(&mut self) {
        self.target.clone_from(&self.online);
    }

    /// Per-agent network inputs for `t ∈ 0..=L`, each `rows × (obs + K)`.
    fn sequence_inputs(&self, batch: &EpisodeBatch) -> Vec<Vec<Vec<f64>>> {
        let (n, o, k, rows) = (batch.agents, batch.obs_len, self.hp.actions, batch.rows);
        (0..n)
            .map(|a| {
                (0..=batch.steps)
                    .map(|t| {
                        let mut x = Vec::with_capacity(rows * (o + k));
                        for b in 0..rows {
                            let at = (t * rows + b) * n + a;
                            x.extend_from_slice(&batch.obs[at * o..(at + 1) * o]);
                            let start = x.len();
                            x.resize(start + k, 0.0);
                            if t > 0 {
                                x[start + batch.actions[((t - 1) * rows + b) * n + a]] = 1.0;
                            }
                        }
                        x
                    })
                    .collect()
            })
            .collect()
    }

    fn check_batch(&self, batch: &EpisodeBatch) -> Result<(), MarlError> {
        let agents = &self.online.agents;
        if batch.agents != agents.len()
            || batch.obs_len != agents[0].obs_len()
            || batch.state_len != self.online.mixer.state_len()
        {
            return Err(MarlError::Config("batch shape does not match the networks"));
        }
        if batch.steps == 0 {
            return Err(MarlError::Config("batch has no transitions"));
        }
        Ok(())
    }

    /// Weighted TD loss; fills `grad` with its gradient when given.
    fn evaluate(&self, batch: &EpisodeBatch, grad: Option<&mut QmixNets>) -> Result<LossReport, MarlError> {
        self.check_batch(batch)?;
        let (n, rows, steps, k, s_len) = (batch.agents, batch.rows, batch.steps, self.hp.actions, batch.state_len);
        let inputs = self.sequence_inputs(batch);
        let len = steps * rows;

        let mut eval_tapes: Vec<AgentSeqTape> = Vec::with_capacity(n);
        let mut chosen = vec![0.0; len * n];
        let mut target_q = vec![0.0; len * n];
        for a in 0..n {
            let tape = self.online.agents[a].forward_sequence(&inputs[a], rows)?;
            let target_tape = self.target.agents[a].forward_sequence(&inputs[a], rows)?;
            for t in 0..steps {
                let q_now = tape.q(t);
                let q_next = tape.q(t + 1);
                let q_next_target = target_tape.q(t + 1);
                for b in 0..rows {
                    let i = t * rows + b;
                    chosen[i * n + a] = q_now[b * k + batch.actions[i * n + a]];
                    let disabled = batch.disabled[((t + 1) * rows + b) * n + a];
                    let next = &q_next[b * k..(b + 1) * k];
                    let best = masked_argmax(next, disabled).unwrap_or(0);
                    target_q[i * n + a] = q_next_target[b * k + best];
                }
            }
            eval_tapes.push(tape);
        }

        let states_now = &batch.states[..len * s_len];
        let states_next = &batch.states[rows * s_len..];
        let mix_tape = self.online.mixer.forward_batch(&chosen, states_now, len)?;
        let target_mix = self.target.mixer.forward_batch(&target_q, states_next, len)?;

        let valid: f64 = batch.mask.iter().sum();
        let q_tot = mix_tape.q_tot().to_vec();
        let mut targets = vec![0.0; len];
        let mut weights = vec![0.0; len];
        let mut loss = 0.0;
        for i in 0..len {
            let bootstrap = if batch.terminated[i] { 0.0 } else { target_mix.q_tot()[i] };
            let y = batch.rewards[i] + self.hp.gamma * bootstrap;
            let w = optimistic_weight(q_tot[i], y, self.hp.mode, self.hp.alpha);
            targets[i] = y;
            weights[i] = w;
            let d = q_tot[i] - y;
            loss += batch.mask[i] * w * d * d;
        }
        loss /= valid.max(1.0);
        if !loss.is_finite() {
            return Err(MarlError::Numeric("non-finite loss"));
        }

        if let Some(grad) = grad {
            let d_q_tot: Vec<f64> = (0..len)
                .map(|i| 2.0 * batch.mask[i] * weights[i] * (q_tot[i] - targets[i]) / valid.max(1.0))
                .collect();
            let d_chosen = self.online.mixer.backward(&mix_tape, &d_q_tot, &mut grad.mixer)?;
            for a in 0..n {
                let d_q: Vec<Vec<f64>> = (0..steps)
                    .map(|t| {
                        let mut d = vec![0.0; rows * k];
                        for b in 0..rows {
                            let i = t * rows + b;
                            d[b * k + batch.actions[i * n + a]] = d_chosen[i * n + a];
                        }
                        d
                    })
                    .collect();
                self.online.agents[a].backward_sequence(&eval_tapes[a], &d_q, &mut grad.agents[a])?;
            }
        }

        Ok(LossReport {
            loss,
            q_tot,
            targets,
            weights,
            valid_steps: valid as usize,
        })
    }

    /// Loss with targets and weights computed from the current networks.
    pub fn loss(&self, batch: &EpisodeBatch) -> Result<LossReport, MarlError> {
        self.evaluate(batch, None)
    }

    /// Loss and its gradient with respect to the evaluation networks
    /// (targets and weights held fixed).
    pub fn loss_and_gradient(&self, batch: &EpisodeBatch) -> Result<(LossReport, QmixNets), MarlError> {
        let mut grad = zeros_like(&self.online);
        let report = self.evaluate(batch, Some(&mut grad))?;
        Ok((report, grad))
    }

    /// One optimizer step. On a numeric failure the networks are unchanged.
    pub fn train_step(&mut self, batch: &EpisodeBatch) -> Result<TrainStats, MarlError> {
        let (report, grad) = self.loss_and_gradient(batch)?;
        let mut g = flatten(&grad);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(MarlError::Numeric("non-finite gradient"));
        }
        let grad_norm = match self.hp.grad_clip {
            Some(c) => clip_grad_norm(&mut g, c),
            None => libm::sqrt(g.iter().map(|v| v * v).sum::<f64>()),
        };
        let mut p = flatten(&self.online);
        self.optimizer.update(&mut p, &g)?;
        load_flat(&mut self.online, &p)?;
        self.train_steps += 1;
        let target_updated = self.train_steps.is_multiple_of(self.hp.target_update_period);
        if target_updated {
            self.hard_update();
        }
        Ok(TrainStats {
            loss: report.loss,
            grad_norm,
            mean_weight: report.mean_weight(&batch.mask),
            target_updated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marl::{Episode, Mode};
    use crate::nn::{check_gradients, finite_difference_gradients};

    fn small_hp(mode: Mode) -> Hyperparams {
        Hyperparams {
            mode,
            actions: 3,
            agent_hidden: 4,
            mixer_embed: 3,
            hyper_hidden: 4,
            batch_size: 2,
            buffer_capacity: 8,
            ..Hyperparams::default()
        }
    }

    fn toy_batch<R: Rng>(rng: &mut R, lens: &[usize]) -> EpisodeBatch {
        let eps: Vec<Episode> = lens
            .iter()
            .map(|&len| {
                let obs = |rng: &mut R| vec![vec![rng.random_range(0.0..1.0); 2], vec![rng.random_range(0.0..1.0); 2]];
                let o0 = obs(rng);
                let mut e = Episode::new(&o0, &[rng.random_range(0.0..1.0); 3], &[0, 0b100]).unwrap();
                for t in 0..len {
                    let o = obs(rng);
                    let acts = [rng.random_range(0..3), rng.random_range(0..2)];
                    e.push(&acts, rng.random_range(-1.0..1.0), t + 1 == len && len % 2 == 1, &o, &[rng.random_range(0.0..1.0); 3], &[0, 0b100])
                        .unwrap();
                }
                e
            })
            .collect();
        let refs: Vec<&Episode> = eps.iter().collect();
        EpisodeBatch::from_episodes(&refs).unwrap()
    }

    #[test]
    fn gamma_zero_targets_are_rewards() {
        let mut rng = crate::seeded_rng(0);
        let hp = Hyperparams { gamma: 0.0, ..small_hp(Mode::Oqmix) };
        let learner = Learner::new(2, 2, 3, hp, &mut rng).unwrap();
        let batch = toy_batch(&mut rng, &[2, 3]);
        let r = learner.loss(&batch).unwrap();
        for i in 0..r.targets.len() {
            if batch.mask[i] > 0.0 {
                assert_eq!(r.targets[i], batch.rewards[i]);
            }
        }
    }

    #[test]
    fn weighted_loss_gradient_matches_finite_differences() {
        let mut rng = crate::seeded_rng(1);
        for mode in [Mode::Qmix, Mode::Oqmix] {
            let mut learner = Learner::new(2, 2, 3, small_hp(mode), &mut rng).unwrap();
            // Distinct target networks make the check sensitive to role mix-ups.
            learner.target.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v *= 0.7));
            let batch = toy_batch(&mut rng, &[2, 3]);
            let (_, grad) = learner.loss_and_gradient(&batch).unwrap();
            let mut probe = learner.clone();
            let numeric = finite_difference_gradients(
                |p| {
                    load_flat(&mut probe.online, p).unwrap();
                    probe.loss(&batch).unwrap().loss
                },
                &flatten(&learner.online),
                1e-6,
            )
            .unwrap();
            let report = check_gradients(&flatten(&grad), &numeric, 1e-4);
            assert!(report.pass, "{mode:?}: {report:?}");
        }
    }

    #[test]
    fn hard_update_copies_and_is_idempotent() {
        let mut rng = crate::seeded_rng(2);
        let mut learner = Learner::new(2, 2, 3, small_hp(Mode::Oqmix), &mut rng).unwrap();
        let batch = toy_batch(&mut rng, &[2, 2]);
        learner.train_step(&batch).unwrap();
        assert_ne!(learner.target, learner.online);
        learner.hard_update();
        assert_eq!(learner.target, learner.online);
        let snapshot = learner.target.clone();
        learner.hard_update();
        assert_eq!(learner.target, snapshot);
    }

    #[test]
    fn target_refresh_period() {
        let mut rng = crate::seeded_rng(3);
        let hp = Hyperparams { target_update_period: 3, ..small_hp(Mode::Qmix) };
        let mut learner = Learner::new(2, 2, 3, hp, &mut rng).unwrap();
        let batch = toy_batch(&mut rng, &[2, 2]);
        let flags: Vec<bool> = (0..6).map(|_| learner.train_step(&batch).unwrap().target_updated).collect();
        assert_eq!(flags, [false, false, true, false, false, true]);
        assert_eq!(learner.target, learner.online);
    }
}
