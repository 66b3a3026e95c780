use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::matrix::{matmul_nn_acc, matmul_nt, outer_acc};
use super::{check_len, orthogonal_init, Activation, Matrix, NnError, Parameters};

/// Fully connected layer `y = act(W·x + b)` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Values recorded by a batched forward pass. A default tape is empty and
/// cannot be used for a backward pass.
#[derive(Debug, Clone, Default)]
pub struct DenseTape {
    rows: usize,
    input: Vec<f64>,
    pre: Vec<f64>,
    output: Vec<f64>,
}

impl DenseTape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_recorded(&self) -> bool {
        !self.input.is_empty()
    }
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self, NnError> {
        check_len(weights.rows(), bias.len())?;
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Orthogonally initialized weights, zero bias.
    pub fn orthogonal<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let weights = orthogonal_init(outputs, inputs, rng.random());
        Self {
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_batch(input, 1)?.output)
    }

    /// Forward pass over `rows` stacked inputs (row-major `rows × in`).
    pub fn forward_batch(&self, input: &[f64], rows: usize) -> Result<DenseTape, NnError> {
        check_len(rows * self.inputs(), input.len())?;
        let out = self.outputs();
        let mut pre = vec![0.0; rows * out];
        matmul_nt(input, rows, &self.weights, &mut pre);
        for row in pre.chunks_exact_mut(out) {
            for (p, b) in row.iter_mut().zip(&self.bias) {
                *p += b;
            }
        }
        let output = if self.activation == Activation::Identity {
            pre.clone()
        } else {
            pre.iter().map(|&u| self.activation.apply(u)).collect()
        };
        Ok(DenseTape {
            rows,
            input: input.to_vec(),
            pre,
            output,
        })
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the layer input.
    pub fn backward(
        &self,
        tape: &DenseTape,
        d_output: &[f64],
        grad: &mut DenseLayer,
    ) -> Result<Vec<f64>, NnError> {
        if !tape.is_recorded() {
            return Err(NnError::BackwardWithoutForward);
        }
        let rows = tape.rows;
        check_len(rows * self.outputs(), d_output.len())?;
        let d_pre: Vec<f64> = if self.activation == Activation::Identity {
            d_output.to_vec()
        } else {
            d_output
                .iter()
                .zip(tape.pre.iter().zip(&tape.output))
                .map(|(g, (&u, &y))| g * self.activation.derivative(u, y))
                .collect()
        };
        outer_acc(&d_pre, &tape.input, rows, &mut grad.weights);
        for row in d_pre.chunks_exact(self.outputs()) {
            for (gb, g) in grad.bias.iter_mut().zip(row) {
                *gb += g;
            }
        }
        let mut d_input = vec![0.0; rows * self.inputs()];
        matmul_nn_acc(&d_pre, rows, &self.weights, &mut d_input);
        Ok(d_input)
    }
}

impl Parameters for DenseLayer {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.weights.data());
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.weights.data_mut());
        f(&mut self.bias);
    }
}
