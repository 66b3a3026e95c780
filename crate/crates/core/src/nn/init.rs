use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{axpy, dot};
use super::Matrix;

/// Orthogonal matrix of the requested shape.
///
/// Rows are orthonormal when `rows <= cols`, columns otherwise. A Gaussian
/// draw is orthonormalized with two passes of modified Gram-Schmidt, which
/// keeps the Gram residual at machine precision for the sizes used here.
/// Deterministic for a fixed seed.
pub fn orthogonal_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    assert!(rows >= 1 && cols >= 1, "orthogonal_init needs a non-empty shape");
    let mut rng = crate::seeded_rng(seed);
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..len).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    for i in 0..n {
        for _pass in 0..2 {
            for j in 0..i {
                let (done, rest) = vecs.split_at_mut(i);
                let proj = dot(&rest[0], &done[j]);
                axpy(-proj, &done[j], &mut rest[0]);
            }
        }
        let norm = libm::sqrt(dot(&vecs[i], &vecs[i]));
        // A degenerate Gaussian draw has probability zero; renormalizing a
        // unit basis vector keeps the function total anyway.
        if norm < 1e-12 {
            vecs[i].fill(0.0);
            vecs[i][i] = 1.0;
        } else {
            vecs[i].iter_mut().for_each(|v| *v /= norm);
        }
    }

    let mut m = Matrix::zeros(rows, cols);
    for (i, v) in vecs.iter().enumerate() {
        for (k, &x) in v.iter().enumerate() {
            if rows <= cols {
                m.set(i, k, x);
            } else {
                m.set(k, i, x);
            }
        }
    }
    m
}
