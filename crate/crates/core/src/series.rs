//! Multivariate samples, norms, order statistics and block schemes.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Norm used to reduce a point of `R^d` to a nonnegative magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
    Sup,
    L1,
}

impl NormKind {
    pub fn apply(self, point: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => {
                if point.len() == 1 {
                    point[0].abs()
                } else {
                    point.iter().map(|x| x * x).sum::<f64>().sqrt()
                }
            }
            NormKind::Sup => point.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::L1 => point.iter().map(|x| x.abs()).sum(),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Euclidean => "euclidean",
            NormKind::Sup => "sup",
            NormKind::L1 => "l1",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(NormKind::Euclidean),
            "sup" | "max" | "linf" => Ok(NormKind::Sup),
            "l1" => Ok(NormKind::L1),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

/// Norms of the `dim`-dimensional points stored row-major in `values`.
///
/// Fails on the first point carrying a non-finite coordinate.
pub fn compute_norms(values: &[f64], dim: usize, kind: NormKind) -> Result<Vec<f64>> {
    if dim == 0 || values.len() % dim != 0 {
        return Err(Error::Parameter(format!(
            "{} values cannot be split into points of dimension {dim}",
            values.len()
        )));
    }
    values
        .chunks_exact(dim)
        .enumerate()
        .map(|(index, point)| {
            if point.iter().all(|x| x.is_finite()) {
                Ok(kind.apply(point))
            } else {
                Err(Error::NonFinite { index })
            }
        })
        .collect()
}

/// A finite sample `X_1, ..., X_n` of a stationary `R^d`-valued series.
///
/// Immutable after construction; the norms are computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    dim: usize,
    norms: Vec<f64>,
    norm: NormKind,
}

impl Series {
    /// Builds a series from row-major values.
    pub fn from_flat(dim: usize, values: Vec<f64>, norm: NormKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let norms = compute_norms(&values, dim, norm)?;
        Ok(Series {
            values,
            dim,
            norms,
            norm,
        })
    }

    pub fn from_points(points: &[Vec<f64>], norm: NormKind) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptySeries)?;
        let mut values = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InconsistentArity {
                    row,
                    expected: dim,
                    found: p.len(),
                });
            }
            values.extend_from_slice(p);
        }
        Self::from_flat(dim, values, norm)
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, values, NormKind::Euclidean)
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Raw row-major coordinates. For `dim == 1` these are the signed observations.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// The same series multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::from_flat(
            self.dim,
            self.values.iter().map(|x| x * lambda).collect(),
            self.norm,
        )
    }

    /// Reads one point per row, one column per coordinate. A first row that
    /// does not parse as numbers is treated as a header.
    pub fn from_csv_reader<R: Read>(reader: R, norm: NormKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut dim = None;
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            let parsed = match parsed {
                Ok(p) => p,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("row {row}: {e}"))),
            };
            let expected = *dim.get_or_insert(parsed.len());
            if parsed.len() != expected {
                return Err(Error::InconsistentArity {
                    row,
                    expected,
                    found: parsed.len(),
                });
            }
            values.extend(parsed);
        }
        let dim = dim.ok_or(Error::EmptySeries)?;
        Self::from_flat(dim, values, norm)
    }

    pub fn from_csv_path(path: &Path, norm: NormKind) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file), norm)
    }

    /// Writes the series as headerless CSV, one row per time point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        for t in 0..self.len() {
            w.write_record(self.point(t).iter().map(|x| format!("{x}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Where a threshold came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdOrigin {
    /// The `(n - k)`-th smallest norm.
    OrderStatistic { k: usize },
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    pub origin: ThresholdOrigin,
}

impl Threshold {
    pub fn user(value: f64) -> Self {
        Threshold {
            value,
            origin: ThresholdOrigin::UserSupplied,
        }
    }
}

/// Returns the `(n - k)`-th smallest norm, so that exactly `k` norms lie
/// strictly above it when there are no ties. Expected linear time.
pub fn order_statistic(norms: &[f64], k: usize) -> Result<Threshold> {
    let n = norms.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidScheme(format!(
            "k must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let mut scratch = norms.to_vec();
    let (_, value, _) = scratch.select_nth_unstable_by(n - k - 1, f64::total_cmp);
    Ok(Threshold {
        value: *value,
        origin: ThresholdOrigin::OrderStatistic { k },
    })
}

/// Number of norms strictly above `threshold`.
pub fn count_exceedances(norms: &[f64], threshold: f64) -> usize {
    norms.iter().filter(|&&x| x > threshold).count()
}

/// Block geometry for a sample of size `n` and block length `r_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowLayout {
    pub n: usize,
    pub r_n: usize,
    /// Number of complete disjoint blocks, `floor(n / r_n)`.
    pub m_n: usize,
    /// Number of sliding windows, `n - r_n + 1`.
    pub q_n: usize,
}

impl WindowLayout {
    pub fn new(n: usize, r_n: usize) -> Result<Self> {
        if r_n < 1 {
            return Err(Error::InvalidScheme("block length must be at least 1".into()));
        }
        if r_n > n {
            return Err(Error::InvalidScheme(format!(
                "block length {r_n} exceeds sample size {n}"
            )));
        }
        Ok(WindowLayout {
            n,
            r_n,
            m_n: n / r_n,
            q_n: n - r_n + 1,
        })
    }

    /// Number of sliding windows containing position `j` (1-based).
    pub fn window_weight(&self, j: usize) -> usize {
        j.min(self.q_n) + 1 - j.saturating_sub(self.r_n - 1).max(1)
    }
}

/// Block length, intermediate sequence and derived counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockScheme {
    pub n: usize,
    pub r_n: usize,
    pub k: usize,
    pub m_n: usize,
    pub q_n: usize,
}

impl BlockScheme {
    pub fn layout(&self) -> WindowLayout {
        WindowLayout {
            n: self.n,
            r_n: self.r_n,
            m_n: self.m_n,
            q_n: self.q_n,
        }
    }
}

/// Heuristic warnings for schemes far from the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeWarning {
    /// `r_n / n > 0.1`.
    LongBlocks { ratio: f64 },
    /// `k < 20`.
    FewExceedances { k: usize },
    /// `r_n * k / n > 5`: blocks are expected to hold many exceedances.
    CrowdedBlocks { ratio: f64 },
}

impl fmt::Display for SchemeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeWarning::LongBlocks { ratio } => {
                write!(f, "r_n/n = {ratio:.3} exceeds 0.1; blocks are long relative to the sample")
            }
            SchemeWarning::FewExceedances { k } => {
                write!(f, "k = {k} is below 20; very few exceedances")
            }
            SchemeWarning::CrowdedBlocks { ratio } => {
                write!(f, "r_n*k/n = {ratio:.3} exceeds 5; expected exceedances per block is large")
            }
        }
    }
}

/// Validates `(n, r_n, k)` and reports soft warnings.
pub fn validate_scheme(n: usize, r_n: usize, k: usize) -> Result<(BlockScheme, Vec<SchemeWarning>)> {
    let layout = WindowLayout::new(n, r_n)?;
    if k < 1 || k >= n {
        return Err(Error::InvalidScheme(format!(
            "k must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let mut warnings = Vec::new();
    let ratio = r_n as f64 / n as f64;
    if ratio > 0.1 {
        warnings.push(SchemeWarning::LongBlocks { ratio });
    }
    if k < 20 {
        warnings.push(SchemeWarning::FewExceedances { k });
    }
    let crowd = r_n as f64 * k as f64 / n as f64;
    if crowd > 5.0 {
        warnings.push(SchemeWarning::CrowdedBlocks { ratio: crowd });
    }
    Ok((
        BlockScheme {
            n,
            r_n,
            k,
            m_n: layout.m_n,
            q_n: layout.q_n,
        },
        warnings,
    ))
}
