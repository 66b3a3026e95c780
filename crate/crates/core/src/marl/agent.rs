use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::nn::{Activation, DenseLayer, DenseTape, GruCell, GruTape, NnError, Parameters};

/// Recurrent per-agent Q-network:
/// `[obs, one-hot last action] → Dense+ReLU → GRU → Dense → Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNet {
    pub input: DenseLayer,
    pub gru: GruCell,
    pub head: DenseLayer,
}

/// Recorded forward pass over a batch of sequences.
#[derive(Debug, Clone, Default)]
pub struct AgentSeqTape {
    rows: usize,
    steps: Vec<(DenseTape, GruTape, DenseTape)>,
}

impl AgentSeqTape {
    /// Q-values at step `t`, `rows × actions`.
    pub fn q(&self, t: usize) -> &[f64] {
        self.steps[t].2.output()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl AgentNet {
    pub fn new<R: Rng + ?Sized>(obs_len: usize, actions: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            input: DenseLayer::orthogonal(obs_len + actions, hidden, Activation::Relu, rng),
            gru: GruCell::orthogonal(hidden, hidden, rng),
            head: DenseLayer::orthogonal(hidden, actions, Activation::Identity, rng),
        }
    }

    pub fn actions(&self) -> usize {
        self.head.outputs()
    }

    pub fn hidden_size(&self) -> usize {
        self.gru.hidden_size()
    }

    pub fn input_len(&self) -> usize {
        self.input.inputs()
    }

    pub fn obs_len(&self) -> usize {
        self.input_len() - self.actions()
    }

    /// Network input: the observation followed by the one-hot previous action
    /// (all zeros before the first action).
    pub fn build_input(&self, obs: &[f64], last_action: Option<usize>, out: &mut Vec<f64>) {
        out.extend_from_slice(obs);
        let k = self.actions();
        let start = out.len();
        out.resize(start + k, 0.0);
        if let Some(a) = last_action {
            out[start + a] = 1.0;
        }
    }

    /// Single step: returns `(Q, new hidden)`.
    pub fn agent_q(
        &self,
        obs: &[f64],
        last_action: Option<usize>,
        hidden: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        if obs.len() != self.obs_len() {
            return Err(NnError::Dimension {
                expected: self.obs_len(),
                actual: obs.len(),
            });
        }
        if last_action.is_some_and(|a| a >= self.actions()) {
            return Err(NnError::InvalidArgument("last action out of range"));
        }
        let mut x = Vec::with_capacity(self.input_len());
        self.build_input(obs, last_action, &mut x);
        let e = self.input.forward(&x)?;
        let h = self.gru.step(&e, hidden)?;
        let q = self.head.forward(&h)?;
        Ok((q, h))
    }

    /// Unrolls over `inputs.len()` steps for `rows` sequences from a zero
    /// hidden state. `inputs[t]` is `rows × input_len`.
    pub fn forward_sequence(&self, inputs: &[Vec<f64>], rows: usize) -> Result<AgentSeqTape, NnError> {
        let mut h = vec![0.0; rows * self.hidden_size()];
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let t_in = self.input.forward_batch(x, rows)?;
            let t_gru = self.gru.forward_batch(t_in.output(), &h, rows)?;
            let t_head = self.head.forward_batch(t_gru.hidden(), rows)?;
            h.copy_from_slice(t_gru.hidden());
            steps.push((t_in, t_gru, t_head));
        }
        Ok(AgentSeqTape { rows, steps })
    }

    /// Backpropagation through time. `d_q[t]` is the loss gradient with
    /// respect to the Q-values at step `t`; steps beyond `d_q.len()` carry
    /// no gradient.
    pub fn backward_sequence(
        &self,
        tape: &AgentSeqTape,
        d_q: &[Vec<f64>],
        grad: &mut AgentNet,
    ) -> Result<(), NnError> {
        if tape.is_empty() {
            return Err(NnError::BackwardWithoutForward);
        }
        if d_q.len() > tape.len() {
            return Err(NnError::Dimension {
                expected: tape.len(),
                actual: d_q.len(),
            });
        }
        let mut dh = vec![0.0; tape.rows * self.hidden_size()];
        for t in (0..d_q.len()).rev() {
            let (t_in, t_gru, t_head) = &tape.steps[t];
            let d_h_out = self.head.backward(t_head, &d_q[t], &mut grad.head)?;
            for (a, b) in dh.iter_mut().zip(&d_h_out) {
                *a += b;
            }
            let (dx, dh_prev) = self.gru.backward(t_gru, &dh, &mut grad.gru)?;
            self.input.backward(t_in, &dx, &mut grad.input)?;
            dh = dh_prev;
        }
        Ok(())
    }
}

impl Parameters for AgentNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.input.visit(f);
        self.gru.visit(f);
        self.head.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.input.visit_mut(f);
        self.gru.visit_mut(f);
        self.head.visit_mut(f);
    }
}
