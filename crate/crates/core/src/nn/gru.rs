use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::activation::sigmoid;
use super::matrix::{matmul_nn_acc, matmul_nt, outer_acc};
use super::{check_len, orthogonal_init, Matrix, NnError, Parameters};

/// One gate's parameters: `W·x + U·h + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruBlock {
    pub input: Matrix,
    pub recurrent: Matrix,
    pub bias: Vec<f64>,
}

impl GruBlock {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            input: Matrix::zeros(hidden, inputs),
            recurrent: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn orthogonal<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            input: orthogonal_init(hidden, inputs, rng.random()),
            recurrent: orthogonal_init(hidden, hidden, rng.random()),
            bias: vec![0.0; hidden],
        }
    }
}

/// Gated recurrent unit:
///
/// ```text
/// z  = σ(Wz x + Uz h + bz)
/// r  = σ(Wr x + Ur h + br)
/// h̃  = tanh(Wh x + Uh (r∘h) + bh)
/// h' = (1 − z)∘h + z∘h̃
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub update: GruBlock,
    pub reset: GruBlock,
    pub candidate: GruBlock,
}

#[derive(Debug, Clone, Default)]
pub struct GruTape {
    rows: usize,
    x: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
    out: Vec<f64>,
}

impl GruTape {
    /// New hidden state, `rows × hidden`.
    pub fn hidden(&self) -> &[f64] {
        &self.out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl GruCell {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            update: GruBlock::zeros(inputs, hidden),
            reset: GruBlock::zeros(inputs, hidden),
            candidate: GruBlock::zeros(inputs, hidden),
        }
    }

    pub fn orthogonal<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            update: GruBlock::orthogonal(inputs, hidden, rng),
            reset: GruBlock::orthogonal(inputs, hidden, rng),
            candidate: GruBlock::orthogonal(inputs, hidden, rng),
        }
    }

    pub fn new(update: GruBlock, reset: GruBlock, candidate: GruBlock) -> Result<Self, NnError> {
        let h = update.bias.len();
        let i = update.input.cols();
        for b in [&update, &reset, &candidate] {
            check_len(h, b.bias.len())?;
            check_len(h, b.input.rows())?;
            check_len(i, b.input.cols())?;
            check_len(h, b.recurrent.rows())?;
            check_len(h, b.recurrent.cols())?;
        }
        Ok(Self {
            update,
            reset,
            candidate,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.update.bias.len()
    }

    pub fn input_size(&self) -> usize {
        self.update.input.cols()
    }

    /// Single-sample step.
    pub fn step(&self, input: &[f64], hidden: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_batch(input, hidden, 1)?.out)
    }

    pub fn forward_batch(&self, x: &[f64], h: &[f64], rows: usize) -> Result<GruTape, NnError> {
        let hs = self.hidden_size();
        check_len(rows * self.input_size(), x.len())?;
        check_len(rows * hs, h.len())?;
        let n = rows * hs;
        let mut z = self.gate_pre(&self.update, x, h, rows);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut r = self.gate_pre(&self.reset, x, h, rows);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut cand = self.gate_pre(&self.candidate, x, &rh, rows);
        cand.iter_mut().for_each(|v| *v = libm::tanh(*v));
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[k] = (1.0 - z[k]) * h[k] + z[k] * cand[k];
        }
        Ok(GruTape {
            rows,
            x: x.to_vec(),
            h: h.to_vec(),
            z,
            r,
            rh,
            cand,
            out,
        })
    }

    fn gate_pre(&self, block: &GruBlock, x: &[f64], h: &[f64], rows: usize) -> Vec<f64> {
        let hs = self.hidden_size();
        let mut a = vec![0.0; rows * hs];
        let mut tmp = vec![0.0; rows * hs];
        matmul_nt(x, rows, &block.input, &mut a);
        matmul_nt(h, rows, &block.recurrent, &mut tmp);
        for (row_a, row_t) in a.chunks_exact_mut(hs).zip(tmp.chunks_exact(hs)) {
            for ((v, t), b) in row_a.iter_mut().zip(row_t).zip(&block.bias) {
                *v += t + b;
            }
        }
        a
    }

    /// Reverse pass for one step. Accumulates into `grad` and returns
    /// `(d_input, d_hidden_prev)`.
    pub fn backward(
        &self,
        tape: &GruTape,
        d_out: &[f64],
        grad: &mut GruCell,
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        if tape.out.is_empty() {
            return Err(NnError::BackwardWithoutForward);
        }
        let rows = tape.rows;
        let hs = self.hidden_size();
        let n = rows * hs;
        check_len(n, d_out.len())?;

        let mut dh = vec![0.0; n];
        let mut da_z = vec![0.0; n];
        let mut da_c = vec![0.0; n];
        for k in 0..n {
            let g = d_out[k];
            let z = tape.z[k];
            let c = tape.cand[k];
            dh[k] = g * (1.0 - z);
            da_z[k] = g * (c - tape.h[k]) * z * (1.0 - z);
            da_c[k] = g * z * (1.0 - c * c);
        }

        // candidate: a_c = Wh x + Uh (r∘h) + bh
        let mut dx = vec![0.0; rows * self.input_size()];
        accumulate_block(&mut grad.candidate, &da_c, &tape.x, &tape.rh, rows);
        matmul_nn_acc(&da_c, rows, &self.candidate.input, &mut dx);
        let mut d_rh = vec![0.0; n];
        matmul_nn_acc(&da_c, rows, &self.candidate.recurrent, &mut d_rh);

        let mut da_r = vec![0.0; n];
        for k in 0..n {
            let r = tape.r[k];
            da_r[k] = d_rh[k] * tape.h[k] * r * (1.0 - r);
            dh[k] += d_rh[k] * r;
        }

        accumulate_block(&mut grad.update, &da_z, &tape.x, &tape.h, rows);
        matmul_nn_acc(&da_z, rows, &self.update.input, &mut dx);
        matmul_nn_acc(&da_z, rows, &self.update.recurrent, &mut dh);

        accumulate_block(&mut grad.reset, &da_r, &tape.x, &tape.h, rows);
        matmul_nn_acc(&da_r, rows, &self.reset.input, &mut dx);
        matmul_nn_acc(&da_r, rows, &self.reset.recurrent, &mut dh);

        Ok((dx, dh))
    }
}

fn accumulate_block(
    grad: &mut GruBlock,
    d_pre: &[f64],
    x: &[f64],
    h_like: &[f64],
    rows: usize,
) {
    let hs = grad.bias.len();
    outer_acc(d_pre, x, rows, &mut grad.input);
    outer_acc(d_pre, h_like, rows, &mut grad.recurrent);
    for row in d_pre.chunks_exact(hs) {
        for (gb, g) in grad.bias.iter_mut().zip(row) {
            *gb += g;
        }
    }
}

impl Parameters for GruBlock {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.input.data());
        f(self.recurrent.data());
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.input.data_mut());
        f(self.recurrent.data_mut());
        f(&mut self.bias);
    }
}

impl Parameters for GruCell {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.update.visit(f);
        self.reset.visit(f);
        self.candidate.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.update.visit_mut(f);
        self.reset.visit_mut(f);
        self.candidate.visit_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{check_gradients, finite_difference_gradients, flatten, load_flat, zeros_like};
    use rand::Rng;

    #[test]
    fn zero_weights_halve_hidden() {
        let cell = GruCell::zeros(3, 2);
        let h = cell.step(&[0.3, -1.0, 2.0], &[0.8, -0.4]).unwrap();
        assert_eq!(h, vec![0.4, -0.2]);
    }

    #[test]
    fn zero_hidden_is_fixed_point_of_zero_cell() {
        let cell = GruCell::zeros(2, 3);
        assert_eq!(cell.step(&[1.0, 1.0], &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn dimension_checks() {
        let cell = GruCell::zeros(2, 3);
        assert!(cell.step(&[1.0], &[0.0; 3]).is_err());
        assert!(cell.step(&[1.0, 2.0], &[0.0; 2]).is_err());
    }

    /// Scalar, loop-per-element evaluation of the recurrence, written
    /// without the batched kernels.
    fn reference_step(cell: &GruCell, x: &[f64], h: &[f64]) -> Vec<f64> {
        let hs = cell.hidden_size();
        let lin = |b: &GruBlock, hv: &[f64], j: usize| {
            let mut s = b.bias[j];
            for (k, xv) in x.iter().enumerate() {
                s += b.input.get(j, k) * xv;
            }
            for (k, hk) in hv.iter().enumerate() {
                s += b.recurrent.get(j, k) * hk;
            }
            s
        };
        let sig = |u: f64| 1.0 / (1.0 + libm::exp(-u));
        let z: Vec<f64> = (0..hs).map(|j| sig(lin(&cell.update, h, j))).collect();
        let r: Vec<f64> = (0..hs).map(|j| sig(lin(&cell.reset, h, j))).collect();
        let rh: Vec<f64> = (0..hs).map(|j| r[j] * h[j]).collect();
        (0..hs)
            .map(|j| {
                let c = libm::tanh(lin(&cell.candidate, &rh, j));
                (1.0 - z[j]) * h[j] + z[j] * c
            })
            .collect()
    }

    #[test]
    fn matches_independent_reference() {
        let mut rng = crate::seeded_rng(21);
        for _ in 0..10 {
            let mut cell = GruCell::orthogonal(4, 5, &mut rng);
            cell.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v *= 0.7));
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = cell.step(&x, &h).unwrap();
            let want = reference_step(&cell, &x, &h);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unrolled_backward_matches_finite_differences() {
        let mut rng = crate::seeded_rng(5);
        let mut cell = GruCell::orthogonal(3, 4, &mut rng);
        cell.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v += rng.random_range(-0.2..0.2)));
        let rows = 2;
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..rows * 3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let h0: Vec<f64> = (0..rows * 4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let loss = |c: &GruCell| {
            let mut h = h0.clone();
            for x in &xs {
                h = c.forward_batch(x, &h, rows).unwrap().out;
            }
            h.iter().map(|v| v * v).sum::<f64>()
        };

        let mut tapes = Vec::new();
        let mut h = h0.clone();
        for x in &xs {
            let t = cell.forward_batch(x, &h, rows).unwrap();
            h = t.out.clone();
            tapes.push(t);
        }
        let mut dh: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
        let mut g = zeros_like(&cell);
        for t in tapes.iter().rev() {
            dh = cell.backward(t, &dh, &mut g).unwrap().1;
        }
        let mut probe = cell.clone();
        let numeric = finite_difference_gradients(
            |p| {
                load_flat(&mut probe, p).unwrap();
                loss(&probe)
            },
            &flatten(&cell),
            1e-5,
        )
        .unwrap();
        let report = check_gradients(&flatten(&g), &numeric, 1e-4);
        assert!(report.pass, "{report:?}");
    }
}
