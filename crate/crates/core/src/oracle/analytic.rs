//! Closed forms for the iid and AR(1) tail processes.
//!
//! For AR(1) with positive Pareto innovations, `Y_j = rho^j Y_0` forward and
//! `Y_{-j} = rho^{-j} Y_0` for `j <= N`, zero beyond, where
//! `P(N >= j) = rho^{j alpha}`. Everything below follows from that
//! representation and `P(Y_0 > y) = y^{-alpha}`.

use crate::functionals::Functional;
use crate::simulate::ProcessKind;

/// Candidate extremal index `P(sup_{j>=1} |Y_j| <= 1)`.
pub fn theta(kind: &ProcessKind) -> Option<f64> {
    match *kind {
        ProcessKind::IidPareto { .. } => Some(1.0),
        ProcessKind::Ar1 { rho, alpha } => Some(1.0 - rho.powf(alpha)),
        ProcessKind::Ma { .. } => None,
    }
}

/// `sum_j P(|Y_j| > 1)`.
pub fn sum_exceedance(kind: &ProcessKind) -> Option<f64> {
    match *kind {
        ProcessKind::IidPareto { .. } => Some(1.0),
        ProcessKind::Ar1 { rho, alpha } => {
            let a = rho.powf(alpha);
            Some((1.0 + a) / (1.0 - a))
        }
        ProcessKind::Ma { .. } => None,
    }
}

/// Cluster size law `pi(m) = P(exc(Y) = m | Y*_{-inf,-1} <= 1)`.
pub fn cluster_size_pi(kind: &ProcessKind, m: usize) -> Option<f64> {
    match *kind {
        ProcessKind::IidPareto { .. } => Some(if m == 1 { 1.0 } else { 0.0 }),
        ProcessKind::Ar1 { rho, alpha } if m >= 1 => {
            let a = rho.powf(alpha);
            Some(a.powi(m as i32 - 1) * (1.0 - a))
        }
        ProcessKind::Ar1 { .. } => Some(0.0),
        ProcessKind::Ma { .. } => None,
    }
}

/// Unconditional law `P(exc(Y) = m)`.
pub fn exc_law(kind: &ProcessKind, m: usize) -> Option<f64> {
    match *kind {
        ProcessKind::IidPareto { .. } => Some(if m == 1 { 1.0 } else { 0.0 }),
        // exc(Y) = N + F with N, F independent, P(N=i) = (1-a)a^i, P(F=f) = (1-a)a^{f-1}
        ProcessKind::Ar1 { rho, alpha } if m >= 1 => {
            let a = rho.powf(alpha);
            Some(m as f64 * (1.0 - a) * (1.0 - a) * a.powi(m as i32 - 1))
        }
        ProcessKind::Ar1 { .. } => Some(0.0),
        ProcessKind::Ma { .. } => None,
    }
}

/// Cluster index `nu*(H)` where a closed form is known.
pub fn nu_star(kind: &ProcessKind, functional: &Functional) -> Option<f64> {
    if let Functional::Exc = functional {
        return Some(1.0);
    }
    match *kind {
        ProcessKind::IidPareto { alpha } => Some(match *functional {
            Functional::Exc | Functional::ExtremalIndicator => 1.0,
            Functional::ClusterSize { m } => cluster_size_pi(kind, m)?,
            Functional::StopLoss { eta } => (1.0 + eta).powf(-alpha),
            Functional::LargeDeviation | Functional::Ruin => 1.0,
        }),
        ProcessKind::Ar1 { rho, alpha } => {
            let th = theta(kind)?;
            Some(match *functional {
                Functional::Exc => 1.0,
                Functional::ExtremalIndicator => th,
                Functional::ClusterSize { m } => th * cluster_size_pi(kind, m)?,
                Functional::StopLoss { eta } => th * ar1_stop_loss_level(rho, eta).powf(-alpha),
                // K(Theta_{0,inf}) = 1/(1-rho), K(Theta_{1,inf}) = rho/(1-rho)
                Functional::LargeDeviation | Functional::Ruin => (1.0 - rho.powf(alpha)) / (1.0 - rho).powf(alpha),
            })
        }
        ProcessKind::Ma { .. } => None,
    }
}

/// `E[H(Y)]` where a closed form is known.
pub fn expected_h_of_y(kind: &ProcessKind, functional: &Functional) -> Option<f64> {
    match *functional {
        Functional::ExtremalIndicator => match kind {
            ProcessKind::Ma { .. } => None,
            _ => Some(1.0),
        },
        Functional::ClusterSize { m } => exc_law(kind, m),
        Functional::Exc => sum_exceedance(kind),
        _ => None,
    }
}

/// Limiting variance `nu*(H) - 2 nu*(H) E[H(Y)] + nu*(H)^2 sum_j P(|Y_j| > 1)`
/// for indicator functionals; zero for `exc`.
pub fn limiting_variance(kind: &ProcessKind, functional: &Functional) -> Option<f64> {
    if let Functional::Exc = functional {
        return Some(0.0);
    }
    let nu = nu_star(kind, functional)?;
    let e = expected_h_of_y(kind, functional)?;
    let sum = sum_exceedance(kind)?;
    Some(nu - 2.0 * nu * e + nu * nu * sum)
}

/// Smallest `y` with `sum_{j>=0} (rho^j y - 1)_+ > eta`, i.e. the root of
/// the increasing piecewise-linear map `g(y) = eta`.
fn ar1_stop_loss_level(rho: f64, eta: f64) -> f64 {
    let g = |y: f64| {
        let mut total = 0.0;
        let mut v = y;
        while v > 1.0 {
            total += v - 1.0;
            v *= rho;
        }
        total
    };
    let (mut lo, mut hi) = (1.0, 1.0 + eta);
    while g(hi) <= eta {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > eta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    const AR: ProcessKind = ProcessKind::Ar1 { rho: 0.5, alpha: 1.0 };

    #[test]
    fn ar1_constants() {
        assert_eq!(theta(&AR), Some(0.5));
        assert_eq!(theta(&ProcessKind::Ar1 { rho: 0.5, alpha: 2.0 }), Some(0.75));
        assert_eq!(sum_exceedance(&AR), Some(3.0));
        let s = sum_exceedance(&ProcessKind::Ar1 { rho: 0.5, alpha: 2.0 }).unwrap();
        assert!((s - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(limiting_variance(&AR, &Functional::ExtremalIndicator), Some(0.25));
        assert_eq!(limiting_variance(&AR, &Functional::ClusterSize { m: 1 }), Some(0.3125));
    }

    #[test]
    fn laws_sum_to_one_and_match_moments() {
        let (mut total, mut mean, mut total_exc) = (0.0, 0.0, 0.0);
        for m in 1..200 {
            let p = cluster_size_pi(&AR, m).unwrap();
            total += p;
            mean += m as f64 * p;
            total_exc += exc_law(&AR, m).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!((mean - 2.0).abs() < 1e-12);
        assert!((total_exc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iid_values() {
        let iid = ProcessKind::IidPareto { alpha: 1.0 };
        assert_eq!(limiting_variance(&iid, &Functional::ExtremalIndicator), Some(0.0));
        assert_eq!(limiting_variance(&iid, &Functional::ClusterSize { m: 1 }), Some(0.0));
        assert_eq!(nu_star(&iid, &Functional::StopLoss { eta: 1.0 }), Some(0.5));
        assert_eq!(nu_star(&iid, &Functional::LargeDeviation), Some(1.0));
    }

    #[test]
    fn stop_loss_level() {
        // g(y) = (y-1) + (y/2-1) for 2 < y <= 4
        let y = ar1_stop_loss_level(0.5, 2.0);
        assert!((y - 8.0 / 3.0).abs() < 1e-12);
    }
}
