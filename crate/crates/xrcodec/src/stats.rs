use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Fraction of episodes that ran every window without the done condition.
pub fn success_rate(completed: &[bool]) -> Result<f64> {
    if completed.is_empty() {
        bail!("success rate of zero episodes is undefined");
    }
    Ok(completed.iter().filter(|&&ok| ok).count() as f64 / completed.len() as f64)
}

/// Sample mean with a two-sided 95% Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Half-width; zero for a single sample.
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// `mean ± t(0.975, n−1)·s/√n` with the unbiased sample deviation.
pub fn mean_ci95(values: &[f64]) -> Result<MeanCi> {
    if values.is_empty() {
        bail!("confidence interval of zero samples is undefined");
    }
    if values.iter().any(|v| !v.is_finite()) {
        bail!("confidence interval over non-finite samples");
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(MeanCi { mean, half_width: 0.0, n });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half_width = t_quantile_975(n - 1) * var.sqrt() / (n as f64).sqrt();
    Ok(MeanCi { mean, half_width, n })
}

/// Trailing moving average; early points average over what exists.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_rate_counts() {
        assert_eq!(success_rate(&[true, true, false, true]).unwrap(), 0.75);
        assert_eq!(success_rate(&[false, false]).unwrap(), 0.0);
        assert_eq!(success_rate(&[true; 3]).unwrap(), 1.0);
        assert!(success_rate(&[]).is_err());
    }

    #[test]
    fn t_quantiles_match_tables() {
        for (dof, t) in [(1, 12.7062), (4, 2.7764), (9, 2.2622), (30, 2.0423)] {
            assert!((t_quantile_975(dof) - t).abs() < 1e-4, "dof {dof}");
        }
    }

    #[test]
    fn single_sample_has_zero_width() {
        let ci = mean_ci95(&[4.2]).unwrap();
        assert_eq!((ci.mean, ci.half_width), (4.2, 0.0));
        assert!(mean_ci95(&[]).is_err());
        assert!(mean_ci95(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn moving_average_is_trailing() {
        assert_eq!(moving_average(&[1.0, 3.0, 5.0, 7.0], 2), [1.0, 2.0, 4.0, 6.0]);
    }
}
