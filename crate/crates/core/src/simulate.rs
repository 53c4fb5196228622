//! Seedable generators of regularly varying stationary processes driven by
//! standard Pareto innovations.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{rng_from_seed, Rng};
use crate::series::Series;

/// Process family. The same grammar names tail-process models in the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessKind {
    /// iid standard Pareto(alpha).
    IidPareto { alpha: f64 },
    /// `X_t = rho X_{t-1} + Z_t`.
    Ar1 { rho: f64, alpha: f64 },
    /// `X_t = sum_i coeffs[i] Z_{t-i}`, `coeffs[0] = 1`.
    Ma { coeffs: Vec<f64>, alpha: f64 },
}

impl ProcessKind {
    pub fn alpha(&self) -> f64 {
        match *self {
            ProcessKind::IidPareto { alpha }
            | ProcessKind::Ar1 { alpha, .. }
            | ProcessKind::Ma { alpha, .. } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        match self {
            ProcessKind::IidPareto { .. } => Ok(()),
            ProcessKind::Ar1 { rho, .. } => {
                if *rho > 0.0 && *rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("AR(1) requires 0 < rho < 1, got {rho}")))
                }
            }
            ProcessKind::Ma { coeffs, .. } => {
                if coeffs.first() != Some(&1.0) {
                    return Err(Error::Parameter("MA coefficients must start with 1".into()));
                }
                if coeffs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
                    return Err(Error::Parameter("MA coefficients must be nonnegative".into()));
                }
                Ok(())
            }
        }
    }

    /// Smallest burn-in that makes the start-up transient negligible.
    pub fn default_burn_in(&self) -> usize {
        match self {
            ProcessKind::IidPareto { .. } => 0,
            ProcessKind::Ar1 { rho, .. } => ar1_burn_in(*rho),
            ProcessKind::Ma { coeffs, .. } => coeffs.len() - 1,
        }
    }
}

/// Smallest `B` with `rho^B < 1e-12`.
pub fn ar1_burn_in(rho: f64) -> usize {
    ((1e-12f64).ln() / rho.ln()).floor() as usize + 1
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessKind::IidPareto { alpha } => write!(f, "iid:alpha={alpha}"),
            ProcessKind::Ar1 { rho, alpha } => write!(f, "ar1:rho={rho},alpha={alpha}"),
            ProcessKind::Ma { coeffs, alpha } if coeffs.len() == 2 => {
                write!(f, "ma1:b={},alpha={alpha}", coeffs[1])
            }
            ProcessKind::Ma { coeffs, alpha } => {
                let c: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "ma:coeffs={},alpha={alpha}", c.join(";"))
            }
        }
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    /// `iid:alpha=1`, `ar1:rho=0.5,alpha=1`, `ma1:b=0.7,alpha=1.5`,
    /// or `ma:coeffs=1;0.5;0.25,alpha=1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |key: &str| -> Result<f64> {
            params
                .get(key)
                .ok_or_else(|| Error::Parse(format!("`{name}` needs `{key}`")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let allowed: &[&str] = match name.trim() {
            "iid" => &["alpha"],
            "ar1" => &["rho", "alpha"],
            "ma1" => &["b", "alpha"],
            "ma" => &["coeffs", "alpha"],
            other => return Err(Error::Parse(format!("unknown process `{other}`"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown parameter `{k}` for `{name}`")));
        }
        let kind = match name.trim() {
            "iid" => ProcessKind::IidPareto { alpha: num("alpha")? },
            "ar1" => ProcessKind::Ar1 {
                rho: num("rho")?,
                alpha: num("alpha")?,
            },
            "ma1" => ProcessKind::Ma {
                coeffs: vec![1.0, num("b")?],
                alpha: num("alpha")?,
            },
            _ => {
                let coeffs = params
                    .get("coeffs")
                    .ok_or_else(|| Error::Parse("`ma` needs `coeffs`".into()))?
                    .split(';')
                    .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("coeffs: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                ProcessKind::Ma {
                    coeffs,
                    alpha: num("alpha")?,
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// A fully specified simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl ProcessSpec {
    /// Uses the default burn-in of the process family.
    pub fn new(kind: ProcessKind, n: usize, seed: u64) -> Self {
        let burn_in = kind.default_burn_in();
        ProcessSpec { kind, n, burn_in, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.n == 0 {
            return Err(Error::Parameter("series length must be positive".into()));
        }
        let required = self.kind.default_burn_in();
        if self.burn_in < required {
            return Err(Error::Parameter(format!(
                "burn-in {} is below the required {required}",
                self.burn_in
            )));
        }
        Ok(())
    }
}

/// Inverse-CDF Pareto draw `u^{-1/alpha}`.
pub fn pareto_from_uniform(u: f64, alpha: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

/// Standard Pareto(alpha) draw with support `[1, inf)`.
pub fn pareto_sample(alpha: f64, rng: &mut Rng) -> f64 {
    // gen() is in [0, 1); 1 - gen() is in (0, 1]
    pareto_from_uniform(1.0 - rng.gen::<f64>(), alpha)
}

/// Generates a univariate sample of length `spec.n`, discarding burn-in.
pub fn generate(spec: &ProcessSpec) -> Result<Series> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let n = spec.n;
    let out = match &spec.kind {
        ProcessKind::IidPareto { alpha } => {
            for _ in 0..spec.burn_in {
                pareto_sample(*alpha, &mut rng);
            }
            (0..n).map(|_| pareto_sample(*alpha, &mut rng)).collect()
        }
        ProcessKind::Ar1 { rho, alpha } => {
            let mut x = pareto_sample(*alpha, &mut rng);
            for _ in 0..spec.burn_in {
                x = rho * x + pareto_sample(*alpha, &mut rng);
            }
            (0..n)
                .map(|_| {
                    x = rho * x + pareto_sample(*alpha, &mut rng);
                    x
                })
                .collect()
        }
        ProcessKind::Ma { coeffs, alpha } => {
            let q = coeffs.len() - 1;
            let skip = spec.burn_in - q;
            for _ in 0..skip {
                pareto_sample(*alpha, &mut rng);
            }
            let z: Vec<f64> = (0..n + q).map(|_| pareto_sample(*alpha, &mut rng)).collect();
            (0..n)
                .map(|t| coeffs.iter().enumerate().map(|(i, c)| c * z[t + q - i]).sum())
                .collect()
        }
    };
    Series::univariate(out)
}
