//! Central-difference gradient oracle.
//!
//! Kept free of any knowledge about layers: it only sees a flat parameter
//! vector and a scalar loss closure, so it stays independent of the
//! backward passes it is used to check.

use alloc::vec::Vec;

use super::NnError;

/// Gradients with magnitude below this are compared in absolute terms
/// (relative error is `|a − b| / max(|a|, |b|, floor)`).
pub const RELATIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Index of the worst parameter.
    pub worst_index: usize,
    pub parameter_count: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// `(L(p + δ) − L(p − δ)) / 2δ` for every coordinate of `params`.
pub fn finite_difference_gradients<F>(
    mut loss: F,
    params: &[f64],
    step: f64,
) -> Result<Vec<f64>, NnError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(NnError::InvalidArgument("finite-difference step must be positive"));
    }
    let mut p = params.to_vec();
    let mut grads = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + step;
        let plus = loss(&p);
        p[i] = orig - step;
        let minus = loss(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NnError::NonFinite("loss during finite differencing"));
        }
        grads.push((plus - minus) / (2.0 * step));
    }
    Ok(grads)
}

/// Same as [`finite_difference_gradients`] restricted to `indices`.
pub fn finite_difference_subset<F>(
    mut loss: F,
    params: &[f64],
    indices: &[usize],
    step: f64,
) -> Result<Vec<f64>, NnError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(NnError::InvalidArgument("finite-difference step must be positive"));
    }
    let mut p = params.to_vec();
    let mut grads = Vec::with_capacity(indices.len());
    for &i in indices {
        let orig = p[i];
        p[i] = orig + step;
        let plus = loss(&p);
        p[i] = orig - step;
        let minus = loss(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NnError::NonFinite("loss during finite differencing"));
        }
        grads.push((plus - minus) / (2.0 * step));
    }
    Ok(grads)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    libm::fabs(a - b) / libm::fabs(a).max(libm::fabs(b)).max(RELATIVE_FLOOR)
}

pub fn check_gradients(analytic: &[f64], numeric: &[f64], tolerance: f64) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient vectors differ in length");
    let (worst_index, max_relative_error) = analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| relative_error(a, b))
        .enumerate()
        .fold((0, 0.0), |acc, (i, e)| if e > acc.1 || e.is_nan() { (i, e) } else { acc });
    GradCheckReport {
        max_relative_error,
        worst_index,
        parameter_count: analytic.len(),
        tolerance,
        pass: max_relative_error < tolerance,
    }
}
