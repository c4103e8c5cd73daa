//! Elementary statistical kernels: normal fits, standardization, normal CDF.
//!
//! All operations are pure functions over immutable inputs and safe to call
//! from any number of concurrent workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviations at or below this floor are treated as degenerate.
///
/// A silent identity pass-through would mask data problems (constant cohorts,
/// duplicated rows), so [`standardize`] fails instead; falling back is a
/// caller policy.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Mean and population standard deviation of a score sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalStats {
    pub mu: f64,
    pub sigma: f64,
    pub count: usize,
}

/// Fit `mu = mean(D)` and `sigma = sqrt(mean((D - mu)^2))`.
///
/// `sigma` is the population standard deviation (divide by `n`, not `n - 1`).
/// Two-pass accumulation in f64.
pub fn fit_normal_stats(scores: &[f64]) -> Result<NormalStats> {
    if scores.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let n = scores.len() as f64;
    let mu = scores.iter().sum::<f64>() / n;
    let var = scores
        .iter()
        .map(|s| {
            let d = s - mu;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(NormalStats {
        mu,
        sigma: var.sqrt(),
        count: scores.len(),
    })
}

/// `(s - mu) / sigma`. Fails with [`Error::DegenerateDistribution`] when
/// `sigma` is at or below [`SIGMA_FLOOR`].
pub fn standardize(s: f64, stats: &NormalStats) -> Result<f64> {
    if stats.sigma <= SIGMA_FLOOR {
        return Err(Error::DegenerateDistribution { sigma: stats.sigma });
    }
    Ok((s - stats.mu) / stats.sigma)
}

/// `Phi((s - mu) / sigma)` with `Phi` the standard normal CDF.
///
/// A degenerate fit (`sigma` at or below the floor) yields the step
/// convention: 0 below the mean, 1 above it, 0.5 exactly at it.
pub fn normal_cdf(s: f64, stats: &NormalStats) -> f64 {
    if stats.sigma <= SIGMA_FLOOR {
        return if s < stats.mu {
            0.0
        } else if s > stats.mu {
            1.0
        } else {
            0.5
        };
    }
    phi((s - stats.mu) / stats.sigma)
}

/// Standard normal CDF, `Phi(z) = erfc(-z / sqrt(2)) / 2`.
///
/// The complementary form keeps full relative precision in the lower tail.
pub fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}
