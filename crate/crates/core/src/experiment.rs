//! Monte Carlo harness: replicate a process, run both blocks estimators for
//! each functional and compare the spread of `sqrt(k)(nu_hat - nu*)` with the
//! oracle limiting variance.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimators::{ansjb_diagnostic, dh_diagnostic, estimate, s_condition_diagnostic, AnsjbRow, DhRow, EstimatorMode, SRow};
use crate::functionals::{parse_functional_list, Functional};
use crate::mc::{derive_seed, tag, with_workers};
use crate::oracle::{analytic, cluster_index_mc, limiting_variance, TailProcessModel};
use crate::series::{order_statistic, validate_scheme, BlockScheme};
use crate::simulate::{generate, ProcessKind, ProcessSpec};

/// Modes compared by the harness, in report order.
pub const MODES: [EstimatorMode; 2] = [EstimatorMode::Sliding, EstimatorMode::Disjoint];

/// Maximum share of replications allowed to have a degenerate threshold.
pub const MAX_DEGENERATE_SHARE: f64 = 0.01;

/// Environment variable overriding the worker count in the CLI.
pub const WORKERS_ENV: &str = "SLIDINGBLOCKS_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub process: ProcessKind,
    pub n: usize,
    pub r_n: usize,
    pub k: usize,
    pub functionals: Vec<Functional>,
    pub replications: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Monte Carlo size for oracle values without a closed form.
    pub oracle_samples: u64,
    /// Thread count; `None` uses the global pool. Never affects the report.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(process: ProcessKind, n: usize, r_n: usize, k: usize, functionals: Vec<Functional>, replications: usize, seed: u64) -> Self {
        ExperimentConfig {
            process,
            n,
            r_n,
            k,
            functionals,
            replications,
            seed,
            out: None,
            oracle_samples: 200_000,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<BlockScheme> {
        self.process.validate()?;
        if self.replications < 2 {
            return Err(Error::Parameter(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.functionals.is_empty() {
            return Err(Error::Parameter("no functionals configured".into()));
        }
        Ok(validate_scheme(self.n, self.r_n, self.k)?.0)
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments are
    /// ignored. Keys: `process.kind` (iid, ar1, ma1, ma), `process.alpha`,
    /// `process.rho`, `process.b`, `process.coeffs` (`;`-separated), `n`,
    /// `r_n`, `k`, `functionals` (comma list), `replications`, `seed`, `out`,
    /// `oracle.samples`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut process: Vec<(String, String)> = Vec::new();
        let mut kind = None;
        let (mut n, mut r_n, mut k, mut reps, mut seed) = (None, None, None, None, None);
        let mut functionals = None;
        let mut out = None;
        let mut oracle_samples = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| -> Result<u64> {
                v.replace('_', "")
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("line {}: {key}: {e}", lineno + 1)))
            };
            match key {
                "process.kind" => kind = Some(value.to_string()),
                "process.alpha" | "process.rho" | "process.b" | "process.coeffs" => {
                    process.push((key["process.".len()..].to_string(), value.to_string()))
                }
                "n" => n = Some(int(value)? as usize),
                "r_n" => r_n = Some(int(value)? as usize),
                "k" => k = Some(int(value)? as usize),
                "replications" => reps = Some(int(value)? as usize),
                "seed" => seed = Some(int(value)?),
                "oracle.samples" => oracle_samples = Some(int(value)?),
                "functionals" => functionals = Some(parse_functional_list(value)?),
                "out" => out = Some(PathBuf::from(value)),
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing key `{name}`"));
        let kind = kind.ok_or_else(|| missing("process.kind"))?;
        let params: Vec<String> = process.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let process = ProcessKind::from_str(&format!("{kind}:{}", params.join(",")))?;
        let mut config = ExperimentConfig::new(
            process,
            n.ok_or_else(|| missing("n"))?,
            r_n.ok_or_else(|| missing("r_n"))?,
            k.ok_or_else(|| missing("k"))?,
            functionals.ok_or_else(|| missing("functionals"))?,
            reps.ok_or_else(|| missing("replications"))?,
            seed.ok_or_else(|| missing("seed"))?,
        );
        config.out = out;
        if let Some(s) = oracle_samples {
            config.oracle_samples = s;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Rounds to 12 significant digits so reports are stable to print and parse.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn ser12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round12(*x))
    } else {
        s.serialize_none()
    }
}

fn ser12_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            seq.serialize_element(&round12(*x))?;
        } else {
            seq.serialize_element(&None::<f64>)?;
        }
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: EstimatorMode,
    /// Mean of the raw estimates.
    #[serde(serialize_with = "ser12")]
    pub estimate_mean: f64,
    /// Mean of `sqrt(k)(nu_hat - nu*)`.
    #[serde(serialize_with = "ser12")]
    pub centered_mean: f64,
    #[serde(serialize_with = "ser12")]
    pub centered_mean_stderr: f64,
    /// Unbiased sample variance of `sqrt(k)(nu_hat - nu*)`.
    #[serde(serialize_with = "ser12")]
    pub variance: f64,
    #[serde(serialize_with = "ser12")]
    pub variance_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSummary {
    pub functional: Functional,
    #[serde(serialize_with = "ser12")]
    pub oracle_nu_star: f64,
    #[serde(serialize_with = "ser12")]
    pub oracle_nu_star_stderr: f64,
    /// Limiting variance; absent for functionals without a variance oracle.
    #[serde(serialize_with = "ser12")]
    pub oracle_variance: f64,
    #[serde(serialize_with = "ser12")]
    pub oracle_variance_stderr: f64,
    pub modes: Vec<ModeSummary>,
    /// Sliding over disjoint variance.
    #[serde(serialize_with = "ser12")]
    pub variance_ratio: f64,
    /// Jackknife standard error of the ratio.
    #[serde(serialize_with = "ser12")]
    pub variance_ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    pub degenerate: bool,
    /// `functionals x modes`, in configuration and [`MODES`] order.
    #[serde(serialize_with = "ser12_vec")]
    pub estimates: Vec<f64>,
}

/// Condition diagnostics on the first replication, at the empirical threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSnapshot {
    #[serde(serialize_with = "ser12")]
    pub threshold: f64,
    pub dh: Vec<DhRow>,
    pub s: Vec<SRow>,
    pub ansjb: Vec<AnsjbRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub process: String,
    pub n: usize,
    pub r_n: usize,
    pub k: usize,
    pub seed: u64,
    pub replications: usize,
    pub replications_used: usize,
    pub degenerate: usize,
    pub oracle_samples: u64,
    pub functionals: Vec<FunctionalSummary>,
    pub diagnostics: Option<DiagnosticsSnapshot>,
    pub per_replication: Vec<ReplicationRecord>,
}

impl ExperimentReport {
    pub fn summary(&self, f: &Functional) -> Option<&FunctionalSummary> {
        self.functionals.iter().find(|s| &s.functional == f)
    }
}

impl FunctionalSummary {
    pub fn mode(&self, mode: EstimatorMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

struct Oracle {
    nu: f64,
    nu_stderr: f64,
    var: f64,
    var_stderr: f64,
}

fn oracle_for(model: &TailProcessModel, f: &Functional, samples: u64, seed: u64) -> Result<Oracle> {
    let kind = model.kind();
    let (nu, nu_stderr) = match analytic::nu_star(kind, f) {
        Some(v) => (v, 0.0),
        None => {
            let e = cluster_index_mc(model, f, samples, seed)?;
            (e.value, e.stderr)
        }
    };
    let (var, var_stderr) = match analytic::limiting_variance(kind, f) {
        Some(v) => (v, 0.0),
        None if f.is_indicator() => {
            let v = limiting_variance(model, f, samples, seed)?;
            (v.value, v.stderr)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(Oracle {
        nu,
        nu_stderr,
        var,
        var_stderr,
    })
}

fn replicate(config: &ExperimentConfig, scheme: &BlockScheme, index: usize) -> Result<ReplicationRecord> {
    let seed = derive_seed(config.seed, tag("replication"), index as u64);
    let series = generate(&ProcessSpec::new(config.process.clone(), config.n, seed))?;
    let mut estimates = Vec::with_capacity(config.functionals.len() * MODES.len());
    for f in &config.functionals {
        for mode in MODES {
            match estimate(&series, f, scheme, mode) {
                Ok(r) => estimates.push(r.value),
                Err(Error::DegenerateThreshold(_)) => {
                    return Ok(ReplicationRecord {
                        index,
                        seed,
                        degenerate: true,
                        estimates: Vec::new(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ReplicationRecord {
        index,
        seed,
        degenerate: false,
        estimates,
    })
}

fn diagnostics(config: &ExperimentConfig, scheme: &BlockScheme) -> Option<DiagnosticsSnapshot> {
    let seed = derive_seed(config.seed, tag("replication"), 0);
    let series = generate(&ProcessSpec::new(config.process.clone(), config.n, seed)).ok()?;
    let c = order_statistic(series.norms(), scheme.k).ok()?.value;
    let r = scheme.r_n;
    let mut lags = vec![1, (r / 10).max(1), (r / 2).max(1), r];
    lags.dedup();
    let mut snapshot = DiagnosticsSnapshot {
        threshold: c,
        dh: dh_diagnostic(&series, c, 1.0, 1.0, &lags, r).unwrap_or_default(),
        s: s_condition_diagnostic(&series, c, 1.0, 1.0, &lags, r).unwrap_or_default(),
        ansjb: ansjb_diagnostic(&series, c, 1.0, &[0.1, 0.5], r).unwrap_or_default(),
    };
    snapshot.dh.iter_mut().for_each(|row| row.p_hat = round12(row.p_hat));
    snapshot.s.iter_mut().for_each(|row| row.s_hat = round12(row.s_hat));
    snapshot.ansjb.iter_mut().for_each(|row| row.a_hat = round12(row.a_hat));
    Some(snapshot)
}

/// Unbiased variance and the standard error of the sample variance,
/// `sqrt((m4 - s^4 (R-3)/(R-1)) / R)`.
fn variance_with_stderr(xs: &[f64]) -> (f64, f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let var = m2 / (r - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let se = ((m4 - var * var * (r - 3.0) / (r - 1.0)) / r).max(0.0).sqrt();
    (mean, var, se)
}

/// Jackknife standard error of `var(a) / var(b)` over paired replications.
fn ratio_jackknife(a: &[f64], b: &[f64]) -> f64 {
    let r = a.len();
    if r < 3 {
        return f64::NAN;
    }
    let sums = |xs: &[f64]| (xs.iter().sum::<f64>(), xs.iter().map(|x| x * x).sum::<f64>());
    let (sa, qa) = sums(a);
    let (sb, qb) = sums(b);
    let m = (r - 1) as f64;
    let loo_var = |s: f64, q: f64| (q - s * s / m) / (m - 1.0);
    let ratios: Vec<f64> = (0..r)
        .map(|i| loo_var(sa - a[i], qa - a[i] * a[i]) / loo_var(sb - b[i], qb - b[i] * b[i]))
        .collect();
    let mean = ratios.iter().sum::<f64>() / r as f64;
    let ss = ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (ss * m / r as f64).sqrt()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let scheme = config.validate()?;
    with_workers(config.workers, || run_in_pool(config, &scheme))
}

fn run_in_pool(config: &ExperimentConfig, scheme: &BlockScheme) -> Result<ExperimentReport> {
    let model = TailProcessModel::new(config.process.clone())?;
    let oracle_seed = derive_seed(config.seed, tag("oracle"), 0);
    let oracles = config
        .functionals
        .iter()
        .map(|f| oracle_for(&model, f, config.oracle_samples, oracle_seed))
        .collect::<Result<Vec<_>>>()?;

    let records = (0..config.replications)
        .into_par_iter()
        .map(|i| replicate(config, scheme, i))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = records.iter().filter(|r| r.degenerate).count();
    if degenerate as f64 > MAX_DEGENERATE_SHARE * config.replications as f64 {
        return Err(Error::TooManyDegenerate {
            degenerate,
            total: config.replications,
        });
    }
    let used: Vec<&ReplicationRecord> = records.iter().filter(|r| !r.degenerate).collect();
    if used.len() < 2 {
        return Err(Error::TooManyDegenerate {
            degenerate,
            total: config.replications,
        });
    }

    let root_k = (config.k as f64).sqrt();
    let mut summaries = Vec::with_capacity(config.functionals.len());
    for (fi, (f, oracle)) in config.functionals.iter().zip(&oracles).enumerate() {
        let mut centered: Vec<Vec<f64>> = Vec::new();
        let mut modes = Vec::new();
        for (mi, mode) in MODES.iter().enumerate() {
            let col = fi * MODES.len() + mi;
            let raw: Vec<f64> = used.iter().map(|r| r.estimates[col]).collect();
            let z: Vec<f64> = raw.iter().map(|v| root_k * (v - oracle.nu)).collect();
            let (mean, var, var_se) = variance_with_stderr(&z);
            modes.push(ModeSummary {
                mode: *mode,
                estimate_mean: raw.iter().sum::<f64>() / raw.len() as f64,
                centered_mean: mean,
                centered_mean_stderr: (var / z.len() as f64).sqrt(),
                variance: var,
                variance_stderr: var_se,
            });
            centered.push(z);
        }
        let (vs, vd) = (modes[0].variance, modes[1].variance);
        let (ratio, ratio_se) = if vs > 0.0 && vd > 0.0 {
            (vs / vd, ratio_jackknife(&centered[0], &centered[1]))
        } else {
            (f64::NAN, f64::NAN)
        };
        summaries.push(FunctionalSummary {
            functional: *f,
            oracle_nu_star: oracle.nu,
            oracle_nu_star_stderr: oracle.nu_stderr,
            oracle_variance: oracle.var,
            oracle_variance_stderr: oracle.var_stderr,
            modes,
            variance_ratio: ratio,
            variance_ratio_stderr: ratio_se,
        });
    }

    Ok(ExperimentReport {
        process: config.process.to_string(),
        n: config.n,
        r_n: config.r_n,
        k: config.k,
        seed: config.seed,
        replications: config.replications,
        replications_used: used.len(),
        degenerate,
        oracle_samples: config.oracle_samples,
        functionals: summaries,
        diagnostics: diagnostics(config, scheme),
        per_replication: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `csv` for a `.csv` extension, JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Parse(format!("unknown report format `{other}`"))),
        }
    }
}

fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round12(x))
    } else {
        String::new()
    }
}

/// Renders the report; JSON keeps struct field order, CSV has one row per
/// functional and mode.
pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut s = String::from(
                "functional,mode,oracle_nu_star,oracle_variance,estimate_mean,centered_mean,centered_mean_stderr,variance,variance_stderr,variance_ratio,variance_ratio_stderr,replications_used\n",
            );
            for f in &report.functionals {
                for m in &f.modes {
                    let _ = writeln!(
                        s,
                        "\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
                        f.functional,
                        m.mode,
                        cell(f.oracle_nu_star),
                        cell(f.oracle_variance),
                        cell(m.estimate_mean),
                        cell(m.centered_mean),
                        cell(m.centered_mean_stderr),
                        cell(m.variance),
                        cell(m.variance_stderr),
                        cell(f.variance_ratio),
                        cell(f.variance_ratio_stderr),
                        report.replications_used
                    );
                }
            }
            Ok(s)
        }
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
