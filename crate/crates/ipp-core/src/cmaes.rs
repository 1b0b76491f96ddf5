//! Self-contained (mu/mu_w, lambda) CMA-ES over fixed-dimension real
//! vectors with box constraints.
//!
//! Strategy internal parameters (recombination weights, learning rates,
//! damping) follow the standard defaults; the caller tunes only the
//! population size, per-coordinate initial step sizes, iteration budget
//! and bounds. Out-of-bounds candidates are repaired by coordinate-wise
//! clipping with a quadratic penalty on the repair distance.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmaConfig {
    /// Offspring per generation; default 4 + floor(3 ln d).
    pub population_size: Option<usize>,
    /// Per-coordinate initial standard deviations.
    pub initial_step_sizes: Vec<f64>,
    pub max_iterations: usize,
    /// Per-coordinate [lo, hi] box.
    pub bounds: Vec<[f64; 2]>,
    pub seed: u64,
}

impl CmaConfig {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.initial_step_sizes.len() != dim || self.bounds.len() != dim {
            return Err(IppError::InvalidArgument(format!(
                "step sizes and bounds must match dimension {dim}"
            )));
        }
        if self.initial_step_sizes.iter().any(|&s| s <= 0.0) {
            return Err(IppError::InvalidArgument(
                "initial step sizes must be positive".into(),
            ));
        }
        if self.bounds.iter().any(|b| b[0] >= b[1]) {
            return Err(IppError::InvalidArgument(
                "bounds must satisfy lo < hi per coordinate".into(),
            ));
        }
        if let Some(l) = self.population_size {
            if l < 2 {
                return Err(IppError::InvalidArgument(format!(
                    "population size must be at least 2, got {l}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CmaResult {
    pub best: Vec<f64>,
    pub best_score: f64,
    pub evaluations: usize,
}

const BOUND_PENALTY: f64 = 1e3;

fn clip(x: &DVector<f64>, bounds: &[[f64; 2]]) -> (DVector<f64>, f64) {
    let mut repaired = x.clone();
    let mut dist2 = 0.0;
    for i in 0..x.len() {
        let c = x[i].clamp(bounds[i][0], bounds[i][1]);
        dist2 += (x[i] - c).powi(2);
        repaired[i] = c;
    }
    (repaired, dist2)
}

/// Maximize the objective from x0. Deterministic per seed; the returned
/// solution is always in bounds and never scores below objective(x0).
pub fn maximize<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    x0: &[f64],
    config: &CmaConfig,
) -> Result<CmaResult> {
    let dim = x0.len();
    if dim == 0 {
        return Err(IppError::InvalidArgument("empty decision vector".into()));
    }
    config.validate(dim)?;
    for (i, &v) in x0.iter().enumerate() {
        if v < config.bounds[i][0] || v > config.bounds[i][1] {
            return Err(IppError::InvalidArgument(format!(
                "x0[{i}] = {v} outside bounds {:?}",
                config.bounds[i]
            )));
        }
    }

    let mut score_of = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut best = x0.to_vec();
    let mut best_score = score_of(x0);

    let lambda = config
        .population_size
        .unwrap_or_else(|| 4 + (3.0 * (dim as f64).ln()).floor() as usize);
    let mut evaluations = 0usize;
    if config.max_iterations == 0 {
        return Ok(CmaResult {
            best,
            best_score,
            evaluations,
        });
    }

    // recombination weights and effective mass
    let mu = lambda / 2;
    let mut weights: Vec<f64> = (0..mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let d = dim as f64;
    let c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (d + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
    let c_1 = 2.0 / ((d + 1.3).powi(2) + mu_eff);
    let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0).powi(2) + mu_eff))
        .min(1.0 - c_1);
    let chi_n = d.sqrt() * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = 1.0f64;
    // per-coordinate spread enters through the initial covariance
    let mut cov = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        config.initial_step_sizes.iter().map(|s| s * s),
    ));
    let mut p_sigma = DVector::zeros(dim);
    let mut p_c = DVector::zeros(dim);

    for iteration in 0..config.max_iterations {
        let eig = cov.clone().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(1e-20).sqrt());
        // C^(1/2) and C^(-1/2) from the eigenbasis
        let b = &eig.eigenvectors;
        let bd = DMatrix::from_fn(dim, dim, |i, j| b[(i, j)] * sqrt_vals[j]);
        let c_inv_sqrt = {
            let binv = b.transpose();
            let scaled = DMatrix::from_fn(dim, dim, |i, j| binv[(i, j)] / sqrt_vals[i]);
            b * scaled
        };

        let mut samples: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let y = &bd * z;
            let x = &mean + sigma * &y;
            let (repaired, dist2) = clip(&x, &config.bounds);
            let raw = score_of(repaired.as_slice());
            evaluations += 1;
            if raw > best_score {
                best_score = raw;
                best = repaired.as_slice().to_vec();
            }
            let penalized = if raw == f64::NEG_INFINITY {
                raw
            } else {
                raw - BOUND_PENALTY * dist2
            };
            samples.push((penalized, y, x));
        }
        samples.sort_by(|a, b| b.0.total_cmp(&a.0));

        let y_w: DVector<f64> = samples
            .iter()
            .take(mu)
            .zip(&weights)
            .map(|((_, y, _), &w)| y * w)
            .sum();
        mean += sigma * &y_w;

        p_sigma = (1.0 - c_sigma) * &p_sigma
            + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * (&c_inv_sqrt * &y_w);
        let ps_norm = p_sigma.norm();
        let h_sigma = if ps_norm
            / (1.0 - (1.0 - c_sigma).powi(2 * (iteration as i32 + 1))).sqrt()
            < (1.4 + 2.0 / (d + 1.0)) * chi_n
        {
            1.0
        } else {
            0.0
        };
        p_c = (1.0 - c_c) * &p_c + h_sigma * (c_c * (2.0 - c_c) * mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(dim, dim);
        for ((_, y, _), &w) in samples.iter().take(mu).zip(&weights) {
            rank_mu.ger(w, y, y, 1.0);
        }
        let delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        cov = (1.0 - c_1 - c_mu) * &cov
            + c_1 * (&p_c * p_c.transpose() + delta_h * &cov)
            + c_mu * rank_mu;
        // keep C symmetric against drift
        let cov_t = cov.transpose();
        cov = 0.5 * (&cov + &cov_t);

        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();
    }

    Ok(CmaResult {
        best,
        best_score,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dim: usize, step: f64, iters: usize, seed: u64) -> CmaConfig {
        CmaConfig {
            population_size: None,
            initial_step_sizes: vec![step; dim],
            max_iterations: iters,
            bounds: vec![[-50.0, 50.0]; dim],
            seed,
        }
    }

    #[test]
    fn recovers_quadratic_optimum() {
        let target = [3.0, -4.0, 10.0];
        let obj = |x: &[f64]| {
            -x.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        };
        let cfg = config(3, 3.0, 45, 7);
        let res = maximize(obj, &[0.0, 0.0, 0.0], &cfg).unwrap();
        let dist = res
            .best
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 0.1 * 3.0, "distance to optimum {dist}");
    }

    #[test]
    fn zero_iterations_is_noop() {
        let obj = |x: &[f64]| -x[0] * x[0];
        let cfg = config(1, 1.0, 0, 1);
        let res = maximize(obj, &[2.0], &cfg).unwrap();
        assert_eq!(res.best, vec![2.0]);
        assert_eq!(res.best_score, -4.0);
        assert_eq!(res.evaluations, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let obj = |x: &[f64]| -(x[0] - 1.0).powi(2) - (x[1] + 2.0).powi(2);
        let cfg = config(2, 2.0, 20, 42);
        let a = maximize(obj, &[0.0, 0.0], &cfg).unwrap();
        let b = maximize(obj, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.best_score, b.best_score);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn never_below_initial_score() {
        for seed in 0..10 {
            let obj = |x: &[f64]| -(x[0] - 0.3).powi(2);
            let cfg = config(1, 5.0, 3, seed);
            let res = maximize(obj, &[0.3], &cfg).unwrap();
            assert!(res.best_score >= -1e-12);
        }
    }

    #[test]
    fn results_respect_bounds() {
        // optimum far outside the box; result must sit on the boundary
        let obj = |x: &[f64]| -(x[0] - 100.0).powi(2) - (x[1] - 100.0).powi(2);
        let mut cfg = config(2, 3.0, 40, 5);
        cfg.bounds = vec![[-1.0, 1.0]; 2];
        let res = maximize(obj, &[0.0, 0.0], &cfg).unwrap();
        for &v in &res.best {
            assert!((-1.0..=1.0).contains(&v));
        }
        assert!(res.best[0] > 0.9 && res.best[1] > 0.9);
    }

    #[test]
    fn non_finite_objective_is_survivable() {
        let obj = |x: &[f64]| {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                -(x[0] + 1.0).powi(2)
            }
        };
        let cfg = config(1, 1.0, 30, 3);
        let res = maximize(obj, &[0.0], &cfg).unwrap();
        assert!(res.best_score.is_finite());
        assert!((res.best[0] + 1.0).abs() < 0.3);
    }

    #[test]
    fn rejects_bad_configs() {
        let obj = |_: &[f64]| 0.0;
        let mut cfg = config(2, 1.0, 5, 1);
        cfg.initial_step_sizes = vec![1.0];
        assert!(maximize(obj, &[0.0, 0.0], &cfg).is_err());
        let mut cfg = config(2, 1.0, 5, 1);
        cfg.bounds = vec![[1.0, -1.0]; 2];
        assert!(maximize(obj, &[0.0, 0.0], &cfg).is_err());
        let cfg = config(2, 1.0, 5, 1);
        assert!(maximize(obj, &[60.0, 0.0], &cfg).is_err());
    }
}
