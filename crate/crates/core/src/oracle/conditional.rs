//! Empirical tail-path law from a long simulated series, used to validate the
//! closed-form tail process models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::McEstimate;
use crate::series::order_statistic;
use crate::simulate::{generate, ProcessSpec};

/// Minimum number of exceedances for a usable empirical law.
pub const MIN_EXCEEDANCES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ConditionalThreshold {
    Absolute(f64),
    /// Empirical quantile of the norms, e.g. `0.99`.
    Quantile(f64),
}

/// Paths `x^{-1}(X_{t-L}, ..., X_{t+L})` for every `t` with `|X_t| > x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTailLaw {
    pub threshold: f64,
    pub horizon: usize,
    pub paths: Vec<Vec<f64>>,
}

impl EmpiricalTailLaw {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Coordinate `j` of a stored path.
    pub fn at(&self, path: &[f64], j: isize) -> f64 {
        path[(self.horizon as isize + j) as usize]
    }

    /// Frequency of `event` with its binomial standard error.
    pub fn probability(&self, event: impl Fn(&[f64]) -> bool) -> McEstimate {
        let n = self.paths.len() as f64;
        let p = self.paths.iter().filter(|p| event(p)).count() as f64 / n;
        McEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
        }
    }

    pub fn mean(&self, f: impl Fn(&[f64]) -> f64) -> McEstimate {
        let vals: Vec<f64> = self.paths.iter().map(|p| f(p)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        McEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Simulates `spec` and collects the rescaled neighbourhoods of exceedances
/// of `x`, for centres `t` with a full `horizon` on both sides.
pub fn conditional_simulation_oracle(
    spec: &ProcessSpec,
    threshold: ConditionalThreshold,
    horizon: usize,
) -> Result<EmpiricalTailLaw> {
    let series = generate(spec)?;
    let norms = series.norms();
    let n = norms.len();
    let x = match threshold {
        ConditionalThreshold::Absolute(x) => x,
        ConditionalThreshold::Quantile(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Parameter(format!("quantile must lie in (0, 1), got {q}")));
            }
            let k = ((1.0 - q) * n as f64).round().max(1.0) as usize;
            order_statistic(norms, k)?.value
        }
    };
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Parameter(format!("threshold must be positive, got {x}")));
    }
    if n <= 2 * horizon {
        return Err(Error::InsufficientSample {
            found: 0,
            required: MIN_EXCEEDANCES,
        });
    }
    let values = series.values();
    let paths: Vec<Vec<f64>> = (horizon..n - horizon)
        .filter(|&t| norms[t] > x)
        .map(|t| values[t - horizon..=t + horizon].iter().map(|v| v / x).collect())
        .collect();
    if paths.len() < MIN_EXCEEDANCES {
        return Err(Error::InsufficientSample {
            found: paths.len(),
            required: MIN_EXCEEDANCES,
        });
    }
    Ok(EmpiricalTailLaw {
        threshold: x,
        horizon,
        paths,
    })
}
