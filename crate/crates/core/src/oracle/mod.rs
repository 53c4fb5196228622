//! Tail-process models and Monte Carlo evaluation of cluster indices.
//!
//! A model describes the tail process `Y_j = |Y_0| Theta_j`, `j in [-L, L]`,
//! of a process from [`crate::simulate`], with `|Y_0|` standard Pareto(alpha)
//! independent of the spectral tail process `Theta`.
//!
//! Cluster indices use two routes:
//! - class A (support in `{x* > 1}`): `nu*(H) = E[H(Y) 1{A_0(Y) = 0}]`, where
//!   `A_0` is the infargmax anchor;
//! - class B (`H = 1{K > 1}` with `K` 1-homogeneous):
//!   `nu*(H) = E[K_+^alpha(Theta_{0,inf}) - K_+^alpha(Theta_{1,inf})]`.

pub mod analytic;
mod conditional;
mod variance;

use rand::Rng as _;
use serde::Serialize;

pub use conditional::{conditional_simulation_oracle, ConditionalThreshold, EmpiricalTailLaw};
pub use variance::{
    block_maxima_comparison, frechet_indicator_constants, limiting_variance, VarianceEstimate,
};

use crate::error::{Error, Result};
use crate::functionals::{Functional, FunctionalClass};
use crate::mc::{mc_mean, sample_moments, tag, McEstimate, Rng};
use crate::simulate::{pareto_sample, ProcessKind};

/// Per-model truncation target for the discarded mass of `sum_j P(|Y_j| > 1)`.
pub const TRUNCATION_MASS: f64 = 1e-9;

/// Draws per acceptance before a rejection sampler gives up.
pub const MAX_REJECTION_DRAWS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProcessModel {
    kind: ProcessKind,
    lag: usize,
}

impl TailProcessModel {
    /// Chooses the lag truncation `L` for the model:
    /// iid uses `L = 1`; MA(q) uses `L = q`; AR(1) uses the smallest `L`
    /// with `rho^L < 1e-9` and discarded exceedance mass
    /// `2 rho^{(L+1) alpha} / (1 - rho^alpha)` below [`TRUNCATION_MASS`].
    pub fn new(kind: ProcessKind) -> Result<Self> {
        kind.validate()?;
        let lag = match &kind {
            ProcessKind::IidPareto { .. } => 1,
            ProcessKind::Ma { coeffs, .. } => (coeffs.len() - 1).max(1),
            ProcessKind::Ar1 { rho, alpha } => {
                let a = rho.powf(*alpha);
                let mut l = 1usize;
                while rho.powi(l as i32) >= 1e-9 || 2.0 * a.powi(l as i32 + 1) / (1.0 - a) >= TRUNCATION_MASS {
                    l += 1;
                }
                l
            }
        };
        Ok(TailProcessModel { kind, lag })
    }

    pub fn with_lag(kind: ProcessKind, lag: usize) -> Result<Self> {
        kind.validate()?;
        if lag == 0 {
            return Err(Error::Parameter("lag truncation must be positive".into()));
        }
        Ok(TailProcessModel { kind, lag })
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.kind.alpha()
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Number of stored coordinates, `2L + 1`.
    pub fn path_len(&self) -> usize {
        2 * self.lag + 1
    }

    /// Writes `Theta_{-L..L}` into `theta` (length `2L + 1`, `Theta_0` at index `L`).
    pub fn sample_spectral_into(&self, rng: &mut Rng, theta: &mut [f64]) {
        let l = self.lag;
        theta.iter_mut().for_each(|t| *t = 0.0);
        theta[l] = 1.0;
        match &self.kind {
            ProcessKind::IidPareto { .. } => {}
            ProcessKind::Ar1 { rho, alpha } => {
                let mut v = 1.0;
                for j in 1..=l {
                    v *= rho;
                    theta[l + j] = v;
                }
                // backward mass survives each step with probability rho^alpha
                let survive = rho.powf(*alpha);
                let mut v = 1.0;
                for j in 1..=l {
                    if rng.gen::<f64>() >= survive {
                        break;
                    }
                    v /= rho;
                    theta[l - j] = v;
                }
            }
            ProcessKind::Ma { coeffs, alpha } => {
                // the large innovation sits at lag i with probability c_i^alpha / sum c^alpha
                let weights: Vec<f64> = coeffs.iter().map(|c| c.powf(*alpha)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                let mut i = 0;
                while i + 1 < weights.len() && (u >= weights[i] || weights[i] == 0.0) {
                    u -= weights[i];
                    i += 1;
                }
                let ci = coeffs[i];
                for (idx, c) in coeffs.iter().enumerate() {
                    let j = idx as isize - i as isize;
                    if j.unsigned_abs() <= l {
                        theta[(l as isize + j) as usize] = c / ci;
                    }
                }
            }
        }
    }

    /// Writes `Y_{-L..L}` into `y`.
    pub fn sample_tail_path_into(&self, rng: &mut Rng, y: &mut [f64]) {
        self.sample_spectral_into(rng, y);
        let radius = pareto_sample(self.alpha(), rng);
        y.iter_mut().for_each(|v| *v *= radius);
    }

    pub fn sample_tail_path(&self, rng: &mut Rng) -> TailPath {
        let mut values = vec![0.0; self.path_len()];
        self.sample_tail_path_into(rng, &mut values);
        TailPath { values, lag: self.lag }
    }
}

/// A truncated path indexed by `j in [-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPath {
    pub values: Vec<f64>,
    pub lag: usize,
}

impl TailPath {
    pub fn at(&self, j: isize) -> f64 {
        let idx = self.lag as isize + j;
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// Coordinates `j >= from`.
    pub fn forward(&self, from: isize) -> &[f64] {
        let idx = (self.lag as isize + from).clamp(0, self.values.len() as isize) as usize;
        &self.values[idx..]
    }

    pub fn infargmax(&self) -> Result<isize> {
        infargmax(&self.values, self.lag)
    }
}

/// First index attaining the maximal norm, reported relative to `offset`
/// (the storage index of coordinate 0).
pub fn infargmax(path: &[f64], offset: usize) -> Result<isize> {
    let mut best = 0.0f64;
    let mut at = None;
    for (i, v) in path.iter().enumerate() {
        let a = v.abs();
        if a > best {
            best = a;
            at = Some(i);
        }
    }
    at.map(|i| i as isize - offset as isize)
        .ok_or_else(|| Error::Parameter("infargmax of an all-zero path is undefined".into()))
}

fn exc_count(path: &[f64]) -> usize {
    path.iter().filter(|v| v.abs() > 1.0).count()
}

fn anchored_at_zero(path: &[f64], lag: usize) -> bool {
    let y0 = path[lag].abs();
    path[..lag].iter().all(|v| v.abs() < y0) && path[lag + 1..].iter().all(|v| v.abs() <= y0)
}

fn eval_on_path(functional: &Functional, path: &[f64]) -> f64 {
    let norms: Vec<f64> = path.iter().map(|v| v.abs()).collect();
    functional.eval_raw(&norms, path, 1.0)
}

/// 1-homogeneous `K` behind a class-B functional, evaluated on a one-sided path.
fn homogeneous_k(functional: &Functional, path: &[f64]) -> Option<f64> {
    match functional {
        Functional::LargeDeviation => Some(path.iter().sum::<f64>().max(0.0)),
        Functional::Ruin => {
            let mut acc = 0.0f64;
            let mut best = 0.0f64;
            for v in path {
                acc += v;
                best = best.max(acc);
            }
            Some(best)
        }
        _ => None,
    }
}

/// Monte Carlo estimate with an optional closed form alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub stderr: f64,
    pub analytic: Option<f64>,
}

impl OracleValue {
    pub fn new(mc: McEstimate, analytic: Option<f64>) -> Self {
        OracleValue {
            value: mc.value,
            stderr: mc.stderr,
            analytic,
        }
    }

    pub fn mc(&self) -> McEstimate {
        McEstimate {
            value: self.value,
            stderr: self.stderr,
        }
    }

    /// The closed form when known, the Monte Carlo value otherwise.
    pub fn best(&self) -> f64 {
        self.analytic.unwrap_or(self.value)
    }
}

/// `theta = P(sup_{j>=1} |Y_j| <= 1)`.
pub fn candidate_extremal_index(model: &TailProcessModel, samples: u64, seed: u64) -> OracleValue {
    let lag = model.lag;
    let mc = mc_mean(samples, seed, tag("theta"), |rng| {
        let mut y = vec![0.0; model.path_len()];
        model.sample_tail_path_into(rng, &mut y);
        if y[lag + 1..].iter().all(|v| v.abs() <= 1.0) {
            1.0
        } else {
            0.0
        }
    });
    OracleValue::new(mc, analytic::theta(&model.kind))
}

/// `sum_j P(|Y_j| > 1) = E[exc(Y)]`.
pub fn sum_exceedance_probabilities(model: &TailProcessModel, samples: u64, seed: u64) -> OracleValue {
    let mc = mc_mean(samples, seed, tag("sum-exceed"), |rng| {
        let mut y = vec![0.0; model.path_len()];
        model.sample_tail_path_into(rng, &mut y);
        exc_count(&y) as f64
    });
    OracleValue::new(mc, analytic::sum_exceedance(&model.kind))
}

/// `E[H(Y)]` over unconditioned tail paths.
pub fn expected_h_of_y(model: &TailProcessModel, functional: &Functional, samples: u64, seed: u64) -> McEstimate {
    mc_mean(samples, seed, tag(&format!("h-of-y/{functional}")), |rng| {
        let mut y = vec![0.0; model.path_len()];
        model.sample_tail_path_into(rng, &mut y);
        eval_on_path(functional, &y)
    })
}

/// Monte Carlo cluster index `nu*(H)`; `exc` is exactly 1.
pub fn cluster_index_mc(model: &TailProcessModel, functional: &Functional, samples: u64, seed: u64) -> Result<McEstimate> {
    let lag = model.lag;
    let alpha = model.alpha();
    let stream = tag(&format!("nu-star/{functional}"));
    Ok(match functional.class() {
        FunctionalClass::Exc => McEstimate::exact(1.0),
        FunctionalClass::A => mc_mean(samples, seed, stream, |rng| {
            let mut y = vec![0.0; model.path_len()];
            model.sample_tail_path_into(rng, &mut y);
            if anchored_at_zero(&y, lag) {
                eval_on_path(functional, &y)
            } else {
                0.0
            }
        }),
        FunctionalClass::B => mc_mean(samples, seed, stream, |rng| {
            let mut theta = vec![0.0; model.path_len()];
            model.sample_spectral_into(rng, &mut theta);
            let k0 = homogeneous_k(functional, &theta[lag..]).unwrap_or(0.0);
            let k1 = homogeneous_k(functional, &theta[lag + 1..]).unwrap_or(0.0);
            k0.powf(alpha) - k1.powf(alpha)
        }),
    })
}

/// `nu*(H exc) = E[H(Y) exc(Y) 1{A_0(Y) = 0}]`, valid for any bounded `H`
/// since `H exc` vanishes on `{x* <= 1}`.
pub fn cluster_index_times_exc(model: &TailProcessModel, functional: &Functional, samples: u64, seed: u64) -> McEstimate {
    let lag = model.lag;
    mc_mean(samples, seed, tag(&format!("nu-star-exc/{functional}")), |rng| {
        let mut y = vec![0.0; model.path_len()];
        model.sample_tail_path_into(rng, &mut y);
        if anchored_at_zero(&y, lag) {
            eval_on_path(functional, &y) * exc_count(&y) as f64
        } else {
            0.0
        }
    })
}

/// `nu*(exc^p) = E[exc(Y)^p 1{A_0(Y) = 0}]`.
pub fn exc_power_index(model: &TailProcessModel, power: i32, samples: u64, seed: u64) -> McEstimate {
    let lag = model.lag;
    mc_mean(samples, seed, tag(&format!("exc-power/{power}")), |rng| {
        let mut y = vec![0.0; model.path_len()];
        model.sample_tail_path_into(rng, &mut y);
        if anchored_at_zero(&y, lag) {
            (exc_count(&y) as f64).powi(power)
        } else {
            0.0
        }
    })
}

/// Samples from the `Q`-sequence by rejection, with the acceptance rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSample {
    pub paths: Vec<TailPath>,
    pub draws: u64,
}

impl QSample {
    /// Acceptance rate with a binomial standard error; estimates `theta`.
    pub fn acceptance(&self) -> McEstimate {
        let p = self.paths.len() as f64 / self.draws as f64;
        McEstimate {
            value: p,
            stderr: (p * (1.0 - p) / self.draws as f64).sqrt(),
        }
    }
}

/// Draws `Y` until `A_0(Y) = 0` and returns `Y / |Y_0|` (so `Q* = |Q_0| = 1`),
/// plus the number of draws used.
pub fn sample_q(model: &TailProcessModel, rng: &mut Rng) -> Result<(TailPath, u64)> {
    let mut y = vec![0.0; model.path_len()];
    for draw in 1..=MAX_REJECTION_DRAWS {
        model.sample_tail_path_into(rng, &mut y);
        if anchored_at_zero(&y, model.lag) {
            let y0 = y[model.lag].abs();
            let values = y.iter().map(|v| v / y0).collect();
            return Ok((TailPath { values, lag: model.lag }, draw));
        }
    }
    Err(Error::Pathological {
        rate: 0.0,
        draws: MAX_REJECTION_DRAWS,
    })
}

/// `count` independent draws of `Q` from a single stream.
pub fn sample_q_batch(model: &TailProcessModel, count: usize, rng: &mut Rng) -> Result<QSample> {
    let mut paths = Vec::with_capacity(count);
    let mut draws = 0;
    for _ in 0..count {
        let (p, d) = sample_q(model, rng)?;
        paths.push(p);
        draws += d;
        let rate = paths.len() as f64 / draws as f64;
        if draws >= MAX_REJECTION_DRAWS && rate < 1e-3 {
            return Err(Error::Pathological { rate, draws });
        }
    }
    Ok(QSample { paths, draws })
}

/// Cluster size law under `Y*_{-inf,-1} <= 1`, by rejection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSizeLaw {
    /// `pi[m - 1]` estimates `pi(m)` for `m = 1..=m_max`.
    pub pi: Vec<McEstimate>,
    /// `sum_m m pi(m)`, over all observed sizes.
    pub mean: McEstimate,
    /// `sum_m m^2 pi(m)`.
    pub second_moment: McEstimate,
    /// Acceptance rate of the conditioning event; estimates `theta`.
    pub acceptance: McEstimate,
    pub accepted: u64,
}

pub fn cluster_size_distribution(model: &TailProcessModel, m_max: usize, samples: u64, seed: u64) -> Result<ClusterSizeLaw> {
    let lag = model.lag;
    // coordinates: 1{exc = m} for m = 1..=m_max, exc, exc^2, draws
    let dim = m_max + 3;
    let moments = sample_moments(samples, dim, seed, tag("cluster-size"), |rng, out| {
        let mut y = vec![0.0; model.path_len()];
        for draw in 1..=MAX_REJECTION_DRAWS {
            model.sample_tail_path_into(rng, &mut y);
            if y[..lag].iter().all(|v| v.abs() <= 1.0) {
                let e = exc_count(&y);
                if (1..=m_max).contains(&e) {
                    out[e - 1] = 1.0;
                }
                out[m_max] = e as f64;
                out[m_max + 1] = (e * e) as f64;
                out[m_max + 2] = draw as f64;
                return;
            }
        }
        out[m_max + 2] = f64::NAN;
    });
    let est = moments.estimates();
    let draws = est[m_max + 2];
    if draws.value.is_nan() {
        return Err(Error::Pathological {
            rate: 0.0,
            draws: MAX_REJECTION_DRAWS,
        });
    }
    // mean draws per acceptance is 1/theta; delta method for the rate
    let rate = 1.0 / draws.value;
    let acceptance = McEstimate {
        value: rate,
        stderr: draws.stderr * rate * rate,
    };
    if rate < 1e-3 {
        return Err(Error::Pathological {
            rate,
            draws: (draws.value * samples as f64) as u64,
        });
    }
    Ok(ClusterSizeLaw {
        pi: est[..m_max].to_vec(),
        mean: est[m_max],
        second_moment: est[m_max + 1],
        acceptance,
        accepted: samples,
    })
}

/// One row of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, lhs: McEstimate, rhs: McEstimate) -> Self {
        let pass = lhs.agrees_with(&rhs, 3.0);
        IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            pass,
        }
    }
}

/// Functionals used for the `nu*(H exc) = E[H(Y)]` checks.
pub fn identity_functionals() -> Vec<Functional> {
    vec![
        Functional::ExtremalIndicator,
        Functional::ClusterSize { m: 1 },
        Functional::ClusterSize { m: 2 },
        Functional::StopLoss { eta: 1.0 },
        Functional::LargeDeviation,
        Functional::Ruin,
    ]
}

/// Checks the cluster-measure identities with independent estimates of both sides:
/// `nu*(exc) = 1`, `nu*(exc^2) = sum_j P(|Y_j|>1)`, `nu*(H exc) = E[H(Y)]`,
/// `nu*(1{x*>1}) = theta`, `sum m pi(m) = 1/theta` and
/// `sum m^2 pi(m) = theta^{-1} sum_j P(|Y_j|>1)`. Each passes iff the two
/// sides agree within 3 combined standard errors.
pub fn identity_suite(model: &TailProcessModel, samples: u64, seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    out.push(IdentityCheck::new(
        "nu*(exc) = 1",
        exc_power_index(model, 1, samples, seed),
        McEstimate::exact(1.0),
    ));
    let sum = sum_exceedance_probabilities(model, samples, seed).mc();
    out.push(IdentityCheck::new(
        "nu*(exc^2) = sum_j P(|Y_j|>1)",
        exc_power_index(model, 2, samples, seed),
        sum,
    ));
    for f in identity_functionals() {
        out.push(IdentityCheck::new(
            format!("nu*({f} * exc) = E[{f}(Y)]"),
            cluster_index_times_exc(model, &f, samples, seed),
            expected_h_of_y(model, &f, samples, seed),
        ));
    }
    let theta = candidate_extremal_index(model, samples, seed).mc();
    out.push(IdentityCheck::new(
        "nu*(extremal) = theta",
        cluster_index_mc(model, &Functional::ExtremalIndicator, samples, seed)?,
        theta,
    ));
    let law = cluster_size_distribution(model, 1, samples, seed)?;
    let inv_theta = McEstimate {
        value: 1.0 / theta.value,
        stderr: theta.stderr / (theta.value * theta.value),
    };
    out.push(IdentityCheck::new("sum m pi(m) = 1/theta", law.mean, inv_theta));
    let ratio = sum.value / theta.value;
    let ratio_se = ratio * ((sum.stderr / sum.value).powi(2) + (theta.stderr / theta.value).powi(2)).sqrt();
    out.push(IdentityCheck::new(
        "sum m^2 pi(m) = sum_j P(|Y_j|>1) / theta",
        law.second_moment,
        McEstimate {
            value: ratio,
            stderr: ratio_se,
        },
    ));
    out.push(IdentityCheck::new("P(Y*_{-inf,-1} <= 1) = theta", law.acceptance, theta));
    Ok(out)
}

/// Summary of the oracle quantities for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterOracleReport {
    pub model: String,
    pub alpha: f64,
    pub lag_truncation: usize,
    pub samples: u64,
    pub seed: u64,
    pub theta: OracleValue,
    pub sum_exceed_prob: OracleValue,
    pub nu_star: Vec<NamedOracleValue>,
    pub pi: Vec<ClusterSizeEntry>,
    pub variances: Vec<NamedOracleValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedOracleValue {
    pub functional: Functional,
    pub value: f64,
    pub stderr: f64,
    pub analytic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSizeEntry {
    pub m: usize,
    pub value: f64,
    pub stderr: f64,
    pub analytic: Option<f64>,
}

pub fn oracle_report(
    model: &TailProcessModel,
    functionals: &[Functional],
    m_max: usize,
    samples: u64,
    seed: u64,
) -> Result<ClusterOracleReport> {
    let theta = candidate_extremal_index(model, samples, seed);
    let sum = sum_exceedance_probabilities(model, samples, seed);
    let mut nu_star = Vec::new();
    let mut variances = Vec::new();
    for f in functionals {
        let nu = cluster_index_mc(model, f, samples, seed)?;
        nu_star.push(NamedOracleValue {
            functional: *f,
            value: nu.value,
            stderr: nu.stderr,
            analytic: analytic::nu_star(&model.kind, f),
        });
        if !(f.is_indicator() || matches!(f, Functional::Exc)) {
            continue;
        }
        let var = limiting_variance(model, f, samples, seed)?;
        variances.push(NamedOracleValue {
            functional: *f,
            value: var.value,
            stderr: var.stderr,
            analytic: analytic::limiting_variance(&model.kind, f),
        });
    }
    let law = cluster_size_distribution(model, m_max, samples, seed)?;
    let pi = law
        .pi
        .iter()
        .enumerate()
        .map(|(i, e)| ClusterSizeEntry {
            m: i + 1,
            value: e.value,
            stderr: e.stderr,
            analytic: analytic::cluster_size_pi(&model.kind, i + 1),
        })
        .collect();
    Ok(ClusterOracleReport {
        model: model.kind.to_string(),
        alpha: model.alpha(),
        lag_truncation: model.lag,
        samples,
        seed,
        theta,
        sum_exceed_prob: sum,
        nu_star,
        pi,
        variances,
    })
}
