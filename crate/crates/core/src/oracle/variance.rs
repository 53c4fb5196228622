//! Limiting variances of the blocks estimators and the block-maxima comparison.

use serde::Serialize;

use super::{cluster_index_mc, expected_h_of_y, sum_exceedance_probabilities, TailProcessModel};
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::mc::McEstimate;

/// `sigma^2 = nu*(H^2) - 2 nu*(H) E[H(Y)] + nu*(H)^2 sum_j P(|Y_j| > 1)` with
/// its inputs; each input comes from an independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub stderr: f64,
    pub nu_star: McEstimate,
    pub expected_h: McEstimate,
    pub sum_exceed: McEstimate,
}

impl VarianceEstimate {
    pub fn mc(&self) -> McEstimate {
        McEstimate {
            value: self.value,
            stderr: self.stderr,
        }
    }
}

/// Monte Carlo limiting variance of `sqrt(k)(nu_hat*(H) - nu*(H))` for an
/// indicator functional (so `nu*(H^2) = nu*(H)`). For `exc` the variance is 0.
pub fn limiting_variance(model: &TailProcessModel, functional: &Functional, samples: u64, seed: u64) -> Result<VarianceEstimate> {
    if let Functional::Exc = functional {
        return Ok(VarianceEstimate {
            value: 0.0,
            stderr: 0.0,
            nu_star: McEstimate::exact(1.0),
            expected_h: McEstimate::exact(f64::NAN),
            sum_exceed: McEstimate::exact(f64::NAN),
        });
    }
    if !functional.is_indicator() {
        return Err(Error::Unsupported(functional.to_string()));
    }
    let nu = cluster_index_mc(model, functional, samples, seed)?;
    let e = expected_h_of_y(model, functional, samples, seed);
    let sum = sum_exceedance_probabilities(model, samples, seed).mc();
    let value = nu.value - 2.0 * nu.value * e.value + nu.value * nu.value * sum.value;
    // delta method over independent inputs
    let d_nu = 1.0 - 2.0 * e.value + 2.0 * nu.value * sum.value;
    let d_e = -2.0 * nu.value;
    let d_sum = nu.value * nu.value;
    let stderr = ((d_nu * nu.stderr).powi(2) + (d_e * e.stderr).powi(2) + (d_sum * sum.stderr).powi(2)).sqrt();
    Ok(VarianceEstimate {
        value,
        stderr,
        nu_star: nu,
        expected_h: e,
        sum_exceed: sum,
    })
}

/// Limiting variances of the disjoint blocks extremal index estimator at the
/// peaks-over-threshold level (`pot`) and at the block-maxima level (`block_maxima`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockMaximaVariances {
    pub pot: f64,
    pub block_maxima: f64,
}

/// `sigma_1^2 = -theta + theta^2 S` and
/// `sigma_3^2 = e^{-theta}(1 - e^{-theta}) - 2 theta e^{-theta} + theta^2 S`,
/// with `S = sum_j P(Y_j > 1)`.
pub fn block_maxima_comparison(theta: f64, sum_exceed: f64) -> Result<BlockMaximaVariances> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Parameter(format!("theta must lie in (0, 1], got {theta}")));
    }
    if !(sum_exceed >= 1.0 && sum_exceed.is_finite()) {
        return Err(Error::Parameter(format!("sum of exceedance probabilities must be >= 1, got {sum_exceed}")));
    }
    let e = (-theta).exp();
    let tail = theta * theta * sum_exceed;
    Ok(BlockMaximaVariances {
        pot: -theta + tail,
        block_maxima: e * (1.0 - e) - 2.0 * theta * e + tail,
    })
}

/// For `f(z) = 1{z > 1}` and standard Fréchet `Z`: the disjoint blocks
/// variance `Var f(Z) = e^{-1} - e^{-2}` and the sliding blocks constant
/// `C(f) = 2e^{-1} - 4e^{-2}`.
pub fn frechet_indicator_constants() -> (f64, f64) {
    let (e1, e2) = ((-1.0f64).exp(), (-2.0f64).exp());
    (e1 - e2, 2.0 * e1 - 4.0 * e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::ProcessKind;

    #[test]
    fn comparison_values() {
        let v = block_maxima_comparison(1.0, 1.0).unwrap();
        assert_eq!(v.pot, 0.0);
        assert!((v.block_maxima - 0.496785).abs() < 1e-6);
        let v = block_maxima_comparison(0.5, 3.0).unwrap();
        assert!((v.pot - 0.25).abs() < 1e-15);
        let e = (-0.5f64).exp();
        assert!((v.block_maxima - (e * (1.0 - e) - e + 0.75)).abs() < 1e-15);
        assert!(block_maxima_comparison(0.0, 1.0).is_err());
        assert!(block_maxima_comparison(0.5, 0.5).is_err());
    }

    #[test]
    fn frechet_constants() {
        let (var, c) = frechet_indicator_constants();
        assert!((var - 0.232544).abs() < 1e-6);
        assert!((c - 0.1944178).abs() < 1e-7);
        // the commonly quoted rounding 0.194416 is within 2e-6
        assert!((c - 0.194416).abs() < 1e-5);
        assert!(var > c);
    }

    #[test]
    fn iid_variances_vanish() {
        let m = TailProcessModel::new(ProcessKind::IidPareto { alpha: 1.0 }).unwrap();
        let v = limiting_variance(&m, &Functional::ExtremalIndicator, 10_000, 1).unwrap();
        assert_eq!(v.value, 0.0);
        let v = limiting_variance(&m, &Functional::ClusterSize { m: 1 }, 10_000, 1).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(limiting_variance(&m, &Functional::Exc, 10, 1).unwrap().value, 0.0);
    }

    #[test]
    fn ar1_extremal_variance() {
        let m = TailProcessModel::new(ProcessKind::Ar1 { rho: 0.5, alpha: 1.0 }).unwrap();
        let v = limiting_variance(&m, &Functional::ExtremalIndicator, 100_000, 3).unwrap();
        assert!(v.mc().agrees_with_value(0.25, 3.0), "{v:?}");
    }
}
