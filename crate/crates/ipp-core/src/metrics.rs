//! Map accuracy and confidence metrics plus the per-measurement log record
//! emitted by mission runs.

use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};

/// One evaluation row, taken each time a measurement is fused.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Mission time of the measurement, s.
    pub t: f64,
    /// Tr(P) for continuous maps, entropy in bits for discrete maps.
    pub uncertainty: f64,
    pub rmse: f64,
    pub wrmse: f64,
    /// Continuous maps only.
    pub mll: Option<f64>,
    pub wmll: Option<f64>,
    /// Adaptive runs only; None when either partition side is empty.
    pub delta_sigma2: Option<f64>,
    pub trial: u64,
    pub planner: String,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(IppError::InvalidArgument(format!(
            "metric inputs must be equal-length and non-empty, got {a} and {b}"
        )));
    }
    Ok(())
}

/// Per-cell weights w_i = truth_i / max(truth), renormalized to mean 1.
/// Flat (or all-zero) truth degrades to uniform weights.
fn value_weights(truth: &[f64]) -> Vec<f64> {
    let max = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return vec![1.0; truth.len()];
    }
    let mut w: Vec<f64> = truth.iter().map(|&v| v / max).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    if mean <= 0.0 {
        return vec![1.0; truth.len()];
    }
    w.iter_mut().for_each(|v| *v /= mean);
    w
}

pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted.len(), truth.len())?;
    let sum: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok((sum / truth.len() as f64).sqrt())
}

pub fn wrmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted.len(), truth.len())?;
    let w = value_weights(truth);
    let sum: f64 = predicted
        .iter()
        .zip(truth)
        .zip(&w)
        .map(|((p, t), wi)| wi * (p - t).powi(2))
        .sum();
    Ok((sum / truth.len() as f64).sqrt())
}

fn nlpd_terms(mean: &[f64], variance: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    check_lengths(mean.len(), truth.len())?;
    check_lengths(variance.len(), truth.len())?;
    mean.iter()
        .zip(variance)
        .zip(truth)
        .map(|((&m, &v), &t)| {
            if v <= 0.0 {
                return Err(IppError::Numerical(format!(
                    "non-positive predictive variance {v}"
                )));
            }
            Ok(0.5 * (2.0 * std::f64::consts::PI * v).ln() + (t - m).powi(2) / (2.0 * v))
        })
        .collect()
}

/// Mean negative log predictive density of the truth under per-cell
/// Gaussians. Lower is better; goes negative once variances shrink below
/// 1/(2π).
pub fn mll(mean: &[f64], variance: &[f64], truth: &[f64]) -> Result<f64> {
    let terms = nlpd_terms(mean, variance, truth)?;
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// MLL with the same value weighting as [`wrmse`].
pub fn wmll(mean: &[f64], variance: &[f64], truth: &[f64]) -> Result<f64> {
    let terms = nlpd_terms(mean, variance, truth)?;
    let w = value_weights(truth);
    Ok(terms.iter().zip(&w).map(|(t, wi)| wi * t).sum::<f64>() / terms.len() as f64)
}

/// Relative variance gap between the uninteresting complement and the
/// interesting subset: (mean var over X_− − mean var over X_I) / mean var
/// over X_−. None when either side is empty or the complement variance is
/// zero.
pub fn delta_sigma2(variance: &[f64], interesting: &[usize]) -> Option<f64> {
    let mark: std::collections::HashSet<usize> = interesting.iter().copied().collect();
    let mut sum_in = 0.0;
    let mut n_in = 0usize;
    let mut sum_out = 0.0;
    let mut n_out = 0usize;
    for (i, &v) in variance.iter().enumerate() {
        if mark.contains(&i) {
            sum_in += v;
            n_in += 1;
        } else {
            sum_out += v;
            n_out += 1;
        }
    }
    if n_in == 0 || n_out == 0 {
        return None;
    }
    let out = sum_out / n_out as f64;
    if out <= 0.0 {
        return None;
    }
    Some((out - sum_in / n_in as f64) / out)
}
