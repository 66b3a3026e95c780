use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::nn::{Activation, DenseLayer, DenseTape, NnError, Parameters};

/// Two-layer hypernetwork `state → hidden (ReLU) → out`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperNet {
    pub hidden: DenseLayer,
    pub out: DenseLayer,
}

#[derive(Debug, Clone, Default)]
struct HyperTape {
    hidden: DenseTape,
    out: DenseTape,
}

impl HyperNet {
    fn new<R: Rng + ?Sized>(state: usize, hidden: usize, out: usize, act: Activation, rng: &mut R) -> Self {
        Self {
            hidden: DenseLayer::orthogonal(state, hidden, Activation::Relu, rng),
            out: DenseLayer::orthogonal(hidden, out, act, rng),
        }
    }

    fn forward(&self, s: &[f64], rows: usize) -> Result<HyperTape, NnError> {
        let hidden = self.hidden.forward_batch(s, rows)?;
        let out = self.out.forward_batch(hidden.output(), rows)?;
        Ok(HyperTape { hidden, out })
    }

    fn backward(&self, tape: &HyperTape, d_out: &[f64], grad: &mut HyperNet) -> Result<(), NnError> {
        let d_hidden = self.out.backward(&tape.out, d_out, &mut grad.out)?;
        self.hidden.backward(&tape.hidden, &d_hidden, &mut grad.hidden)?;
        Ok(())
    }
}

impl Parameters for HyperNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.hidden.visit(f);
        self.out.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.hidden.visit_mut(f);
        self.out.visit_mut(f);
    }
}

/// Monotone mixer
/// `Q_tot = w2(s)ᵀ·elu(W1(s)·q + b1(s)) + b2(s)` where the hypernetworks
/// producing `W1` and `w2` end in an absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerNet {
    agents: usize,
    embed: usize,
    pub hyper_w1: HyperNet,
    pub hyper_b1: DenseLayer,
    pub hyper_w2: HyperNet,
    pub hyper_b2: HyperNet,
}

/// Recorded batched mixer pass.
#[derive(Debug, Clone, Default)]
pub struct MixerTape {
    rows: usize,
    q: Vec<f64>,
    w1: HyperTape,
    b1: DenseTape,
    w2: HyperTape,
    b2: HyperTape,
    pre: Vec<f64>,
    hid: Vec<f64>,
    q_tot: Vec<f64>,
}

impl MixerTape {
    pub fn q_tot(&self) -> &[f64] {
        &self.q_tot
    }
}

impl MixerNet {
    pub fn new<R: Rng + ?Sized>(
        agents: usize,
        state_len: usize,
        embed: usize,
        hyper_hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            agents,
            embed,
            hyper_w1: HyperNet::new(state_len, hyper_hidden, agents * embed, Activation::Abs, rng),
            hyper_b1: DenseLayer::orthogonal(state_len, embed, Activation::Identity, rng),
            hyper_w2: HyperNet::new(state_len, hyper_hidden, embed, Activation::Abs, rng),
            hyper_b2: HyperNet::new(state_len, hyper_hidden, 1, Activation::Identity, rng),
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn state_len(&self) -> usize {
        self.hyper_b1.inputs()
    }

    pub fn embed(&self) -> usize {
        self.embed
    }

    /// Single-sample mix.
    pub fn mix(&self, q: &[f64], state: &[f64]) -> Result<f64, NnError> {
        Ok(self.forward_batch(q, state, 1)?.q_tot[0])
    }

    /// `q` is `rows × agents`, `state` is `rows × state_len`.
    pub fn forward_batch(&self, q: &[f64], state: &[f64], rows: usize) -> Result<MixerTape, NnError> {
        let (n, e) = (self.agents, self.embed);
        if q.len() != rows * n {
            return Err(NnError::Dimension {
                expected: rows * n,
                actual: q.len(),
            });
        }
        let w1 = self.hyper_w1.forward(state, rows)?;
        let b1 = self.hyper_b1.forward_batch(state, rows)?;
        let w2 = self.hyper_w2.forward(state, rows)?;
        let b2 = self.hyper_b2.forward(state, rows)?;
        let mut pre = b1.output().to_vec();
        let w1o = w1.out.output();
        for r in 0..rows {
            let pr = &mut pre[r * e..(r + 1) * e];
            for a in 0..n {
                let qa = q[r * n + a];
                let wrow = &w1o[(r * n + a) * e..(r * n + a + 1) * e];
                for (p, w) in pr.iter_mut().zip(wrow) {
                    *p += qa * w;
                }
            }
        }
        let hid: Vec<f64> = pre.iter().map(|&u| Activation::Elu.apply(u)).collect();
        let w2o = w2.out.output();
        let b2o = b2.out.output();
        let q_tot = (0..rows)
            .map(|r| {
                let h = &hid[r * e..(r + 1) * e];
                let w = &w2o[r * e..(r + 1) * e];
                h.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b2o[r]
            })
            .collect();
        Ok(MixerTape {
            rows,
            q: q.to_vec(),
            w1,
            b1,
            w2,
            b2,
            pre,
            hid,
            q_tot,
        })
    }

    /// Accumulates parameter gradients and returns `∂L/∂q` (`rows × agents`).
    pub fn backward(&self, tape: &MixerTape, d_q_tot: &[f64], grad: &mut MixerNet) -> Result<Vec<f64>, NnError> {
        if tape.q_tot.is_empty() {
            return Err(NnError::BackwardWithoutForward);
        }
        let (n, e, rows) = (self.agents, self.embed, tape.rows);
        if d_q_tot.len() != rows {
            return Err(NnError::Dimension {
                expected: rows,
                actual: d_q_tot.len(),
            });
        }
        let w1o = tape.w1.out.output();
        let w2o = tape.w2.out.output();
        let mut d_w2 = vec![0.0; rows * e];
        let mut d_pre = vec![0.0; rows * e];
        let mut d_w1 = vec![0.0; rows * n * e];
        let mut d_q = vec![0.0; rows * n];
        for r in 0..rows {
            let g = d_q_tot[r];
            for k in r * e..(r + 1) * e {
                d_w2[k] = g * tape.hid[k];
                d_pre[k] = g * w2o[k] * Activation::Elu.derivative(tape.pre[k], tape.hid[k]);
            }
            let dp = &d_pre[r * e..(r + 1) * e];
            for a in 0..n {
                let base = (r * n + a) * e;
                let qa = tape.q[r * n + a];
                let mut acc = 0.0;
                for j in 0..e {
                    d_w1[base + j] = dp[j] * qa;
                    acc += dp[j] * w1o[base + j];
                }
                d_q[r * n + a] = acc;
            }
        }
        self.hyper_w1.backward(&tape.w1, &d_w1, &mut grad.hyper_w1)?;
        self.hyper_b1.backward(&tape.b1, &d_pre, &mut grad.hyper_b1)?;
        self.hyper_w2.backward(&tape.w2, &d_w2, &mut grad.hyper_w2)?;
        self.hyper_b2.backward(&tape.b2, d_q_tot, &mut grad.hyper_b2)?;
        Ok(d_q)
    }
}

impl Parameters for MixerNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.hyper_w1.visit(f);
        self.hyper_b1.visit(f);
        self.hyper_w2.visit(f);
        self.hyper_b2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.hyper_w1.visit_mut(f);
        self.hyper_b1.visit_mut(f);
        self.hyper_w2.visit_mut(f);
        self.hyper_b2.visit_mut(f);
    }
}
