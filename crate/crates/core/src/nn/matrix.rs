use alloc::vec;
use alloc::vec::Vec;

use super::NnError;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        super::check_len(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, NnError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            super::check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NnError> {
        super::check_len(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                axpy(self.data[i * self.cols + k], other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[n×o] = x[n×i] · wᵀ` where `w` is `o×i`. `out` is overwritten.
pub(crate) fn matmul_nt(x: &[f64], n: usize, w: &Matrix, out: &mut [f64]) {
    let (o, i) = (w.rows, w.cols);
    debug_assert_eq!(x.len(), n * i);
    debug_assert_eq!(out.len(), n * o);
    for r in 0..n {
        let xr = &x[r * i..(r + 1) * i];
        let orow = &mut out[r * o..(r + 1) * o];
        for (j, dst) in orow.iter_mut().enumerate() {
            *dst = dot(xr, w.row(j));
        }
    }
}

/// `dx[n×i] += dy[n×o] · w` where `w` is `o×i`.
pub(crate) fn matmul_nn_acc(dy: &[f64], n: usize, w: &Matrix, dx: &mut [f64]) {
    let (o, i) = (w.rows, w.cols);
    for r in 0..n {
        let dyr = &dy[r * o..(r + 1) * o];
        let dxr = &mut dx[r * i..(r + 1) * i];
        for (j, &g) in dyr.iter().enumerate() {
            if g != 0.0 {
                axpy(g, w.row(j), dxr);
            }
        }
    }
}

/// `dw[o×i] += dyᵀ[o×n] · x[n×i]`.
pub(crate) fn outer_acc(dy: &[f64], x: &[f64], n: usize, dw: &mut Matrix) {
    let (o, i) = (dw.rows, dw.cols);
    for r in 0..n {
        let dyr = &dy[r * o..(r + 1) * o];
        let xr = &x[r * i..(r + 1) * i];
        for (j, &g) in dyr.iter().enumerate() {
            if g != 0.0 {
                axpy(g, xr, &mut dw.data[j * i..(j + 1) * i]);
            }
        }
    }
}
