//! Cluster functionals evaluated on scaled blocks, with linear-time sliding
//! and disjoint block sums.
//!
//! A functional `H` is applied to `x / s` for a block `x` and scale `s > 0`.
//! Every comparison is made on the scaled quantities (`x_j / s`, `|x_j| / s`)
//! so that `H(x, s)` and `H(x / s, 1)` agree bit for bit.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::{Series, WindowLayout};

/// The cluster functionals shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// Number of points with norm above the scale.
    Exc,
    /// `1{max_j |x_j| > s}`.
    ExtremalIndicator,
    /// `1{exc(x / s) = m}`.
    ClusterSize { m: usize },
    /// `1{sum_j (x_j / s - 1)_+ > eta}`, univariate.
    StopLoss { eta: f64 },
    /// `1{(sum_j x_j)_+ > s}`, univariate.
    LargeDeviation,
    /// `1{sup_i (sum_{j <= i} x_j)_+ > s}`, univariate.
    Ruin,
}

/// Classes for which the limit theory holds. Class B additionally needs
/// small jumps to be asymptotically negligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalClass {
    Exc,
    A,
    B,
}

impl Functional {
    pub fn cluster_size(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("cluster size m must be at least 1".into()));
        }
        Ok(Functional::ClusterSize { m })
    }

    pub fn stop_loss(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Parameter(format!("stop-loss eta must be positive, got {eta}")));
        }
        Ok(Functional::StopLoss { eta })
    }

    pub fn requires_univariate(&self) -> bool {
        matches!(
            self,
            Functional::StopLoss { .. } | Functional::LargeDeviation | Functional::Ruin
        )
    }

    pub fn class(&self) -> FunctionalClass {
        match self {
            Functional::Exc => FunctionalClass::Exc,
            Functional::ExtremalIndicator
            | Functional::ClusterSize { .. }
            | Functional::StopLoss { .. } => FunctionalClass::A,
            Functional::LargeDeviation | Functional::Ruin => FunctionalClass::B,
        }
    }

    /// Whether inference additionally requires the small-jump negligibility condition.
    pub fn requires_ansjb(&self) -> bool {
        self.class() == FunctionalClass::B
    }

    /// Whether `H` takes values in `{0, 1}`, so that `H^2 = H`.
    pub fn is_indicator(&self) -> bool {
        !matches!(self, Functional::Exc)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.requires_univariate() && dim != 1 {
            return Err(Error::Dimension {
                functional: self.to_string(),
                dim,
            });
        }
        Ok(())
    }

    /// Evaluates on a block. `values` are the signed observations and are
    /// only read by univariate functionals; `norms` must have the same length.
    ///
    /// No validation is performed; see [`ScaledBlock`] for the checked entry point.
    pub fn eval_raw(&self, norms: &[f64], values: &[f64], s: f64) -> f64 {
        let hit = |b: bool| if b { 1.0 } else { 0.0 };
        match *self {
            Functional::Exc => norms.iter().filter(|&&x| x / s > 1.0).count() as f64,
            Functional::ExtremalIndicator => hit(norms.iter().any(|&x| x / s > 1.0)),
            Functional::ClusterSize { m } => {
                hit(norms.iter().filter(|&&x| x / s > 1.0).count() == m)
            }
            Functional::StopLoss { eta } => {
                let mut acc = Neumaier::default();
                for &x in values {
                    acc.add((x / s - 1.0).max(0.0));
                }
                hit(acc.value() > eta)
            }
            Functional::LargeDeviation => {
                let mut acc = Neumaier::default();
                for &x in values {
                    acc.add(x / s);
                }
                hit(acc.value() > 1.0)
            }
            Functional::Ruin => {
                let mut acc = Neumaier::default();
                let mut best = 0.0f64;
                for &x in values {
                    acc.add(x / s);
                    best = best.max(acc.value());
                }
                hit(best > 1.0)
            }
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Exc => f.write_str("exc"),
            Functional::ExtremalIndicator => f.write_str("extremal"),
            Functional::ClusterSize { m } => write!(f, "cluster-size:m={m}"),
            Functional::StopLoss { eta } => write!(f, "stop-loss:eta={eta}"),
            Functional::LargeDeviation => f.write_str("large-dev"),
            Functional::Ruin => f.write_str("ruin"),
        }
    }
}

impl Serialize for Functional {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Functional {
    type Err = Error;

    /// Parses `exc`, `extremal`, `cluster-size:m=3`, `stop-loss:eta=1.5`,
    /// `large-dev` or `ruin`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s, None),
        };
        let param = |key: &str| -> Result<&str> {
            let p = params.ok_or_else(|| Error::Parse(format!("`{name}` needs `{key}=<value>`")))?;
            match p.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok(v.trim()),
                _ => Err(Error::Parse(format!("expected `{key}=<value>` in `{s}`"))),
            }
        };
        let no_params = |f: Functional| {
            if params.is_some() {
                Err(Error::Parse(format!("`{name}` takes no parameters")))
            } else {
                Ok(f)
            }
        };
        match name {
            "exc" => no_params(Functional::Exc),
            "extremal" => no_params(Functional::ExtremalIndicator),
            "large-dev" => no_params(Functional::LargeDeviation),
            "ruin" => no_params(Functional::Ruin),
            "cluster-size" => {
                let m = param("m")?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("cluster size m: {e}")))?;
                Functional::cluster_size(m)
            }
            "stop-loss" => {
                let eta = param("eta")?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("stop-loss eta: {e}")))?;
                Functional::stop_loss(eta)
            }
            other => Err(Error::Parse(format!("unknown functional `{other}`"))),
        }
    }
}

/// Parses a comma-separated list of functionals.
pub fn parse_functional_list(s: &str) -> Result<Vec<Functional>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

/// Evaluator interface for cluster functionals on a contiguous block.
///
/// Implementors get brute-force sliding and disjoint sums through
/// [`brute_force_sliding_sum`] and [`brute_force_disjoint_sum`].
pub trait BlockFunctional {
    /// `values` holds `norms.len() * dim` row-major coordinates.
    fn evaluate(&self, norms: &[f64], values: &[f64], dim: usize, s: f64) -> f64;
}

impl BlockFunctional for Functional {
    fn evaluate(&self, norms: &[f64], values: &[f64], _dim: usize, s: f64) -> f64 {
        self.eval_raw(norms, values, s)
    }
}

/// The block `X_{start+1..start+len} / scale` of a series.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBlock<'a> {
    series: &'a Series,
    start: usize,
    len: usize,
    scale: f64,
}

impl<'a> ScaledBlock<'a> {
    pub fn new(series: &'a Series, start: usize, len: usize, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if start + len > series.len() {
            return Err(Error::Parameter(format!(
                "block [{start}, {}) exceeds series length {}",
                start + len,
                series.len()
            )));
        }
        Ok(ScaledBlock {
            series,
            start,
            len,
            scale,
        })
    }

    pub fn norms(&self) -> &'a [f64] {
        &self.series.norms()[self.start..self.start + self.len]
    }

    pub fn values(&self) -> &'a [f64] {
        let d = self.series.dim();
        &self.series.values()[self.start * d..(self.start + self.len) * d]
    }

    pub fn eval(&self, functional: &Functional) -> Result<f64> {
        functional.check_dim(self.series.dim())?;
        Ok(functional.eval_raw(self.norms(), self.values(), self.scale))
    }
}

fn check_scale(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Scale(s))
    }
}

/// Evaluates `functional` on the block starting at `start` (0-based) of length `len`.
pub fn eval(functional: &Functional, series: &Series, start: usize, len: usize, s: f64) -> Result<f64> {
    ScaledBlock::new(series, start, len, s)?.eval(functional)
}

/// `sum_{i=0}^{q_n-1} H(X_{i+1..i+r_n} / s)`, in `O(n)` total.
pub fn sliding_sum(functional: &Functional, series: &Series, layout: &WindowLayout, s: f64) -> Result<f64> {
    check_scale(s)?;
    check_layout(series, layout)?;
    functional.check_dim(series.dim())?;
    let r = layout.r_n;
    let q = layout.q_n;
    let scaled_norms = || series.norms()[..layout.n].iter().map(|x| x / s);

    let total = match *functional {
        Functional::Exc => {
            let flags: Vec<bool> = scaled_norms().map(|u| u > 1.0).collect();
            let mut count = flags[..r].iter().filter(|&&b| b).count();
            let mut total = count as u64;
            for i in 1..q {
                count = count + usize::from(flags[i + r - 1]) - usize::from(flags[i - 1]);
                total += count as u64;
            }
            total as f64
        }
        Functional::ClusterSize { m } => {
            let flags: Vec<bool> = scaled_norms().map(|u| u > 1.0).collect();
            let mut count = flags[..r].iter().filter(|&&b| b).count();
            let mut total = u64::from(count == m);
            for i in 1..q {
                count = count + usize::from(flags[i + r - 1]) - usize::from(flags[i - 1]);
                total += u64::from(count == m);
            }
            total as f64
        }
        Functional::ExtremalIndicator => {
            let u: Vec<f64> = scaled_norms().collect();
            let mut window = SlidingMax::new(&u);
            let mut total = 0u64;
            for end in 0..layout.n {
                window.push(end);
                if end + 1 >= r {
                    let start = end + 1 - r;
                    window.expire_before(start);
                    total += u64::from(u[window.front()] > 1.0);
                }
            }
            total as f64
        }
        Functional::StopLoss { eta } => {
            let e: Vec<f64> = series.values()[..layout.n]
                .iter()
                .map(|x| (x / s - 1.0).max(0.0))
                .collect();
            let mut acc = Neumaier::default();
            for &v in &e[..r] {
                acc.add(v);
            }
            let mut total = u64::from(acc.value() > eta);
            for i in 1..q {
                acc.add(e[i + r - 1]);
                acc.add(-e[i - 1]);
                total += u64::from(acc.value() > eta);
            }
            total as f64
        }
        Functional::LargeDeviation => {
            let v: Vec<f64> = series.values()[..layout.n].iter().map(|x| x / s).collect();
            let mut acc = Neumaier::default();
            for &x in &v[..r] {
                acc.add(x);
            }
            let mut total = u64::from(acc.value() > 1.0);
            for i in 1..q {
                acc.add(v[i + r - 1]);
                acc.add(-v[i - 1]);
                total += u64::from(acc.value() > 1.0);
            }
            total as f64
        }
        Functional::Ruin => {
            // Window starting at `a` has partial sums P[i] - P[a - 1], i in a..a+r.
            let mut prefix = Vec::with_capacity(layout.n);
            let mut acc = Neumaier::default();
            for x in &series.values()[..layout.n] {
                acc.add(x / s);
                prefix.push(acc.value());
            }
            let mut window = SlidingMax::new(&prefix);
            let mut total = 0u64;
            for end in 0..layout.n {
                window.push(end);
                if end + 1 >= r {
                    let start = end + 1 - r;
                    window.expire_before(start);
                    let base = if start == 0 { 0.0 } else { prefix[start - 1] };
                    total += u64::from(prefix[window.front()] - base > 1.0);
                }
            }
            total as f64
        }
    };
    Ok(total)
}

/// `sum_{i=1}^{m_n} H(X_{(i-1)r_n+1..i r_n} / s)`; the trailing partial block is dropped.
pub fn disjoint_sum(functional: &Functional, series: &Series, layout: &WindowLayout, s: f64) -> Result<f64> {
    check_scale(s)?;
    check_layout(series, layout)?;
    functional.check_dim(series.dim())?;
    let r = layout.r_n;
    let d = series.dim();
    let norms = series.norms();
    let values = series.values();
    let mut total = 0.0;
    for b in 0..layout.m_n {
        total += functional.eval_raw(&norms[b * r..(b + 1) * r], &values[b * r * d..(b + 1) * r * d], s);
    }
    Ok(total)
}

/// Reference `O(n r_n)` sliding sum for any [`BlockFunctional`].
pub fn brute_force_sliding_sum<F: BlockFunctional + ?Sized>(
    functional: &F,
    series: &Series,
    layout: &WindowLayout,
    s: f64,
) -> Result<f64> {
    check_scale(s)?;
    check_layout(series, layout)?;
    let (r, d) = (layout.r_n, series.dim());
    Ok((0..layout.q_n)
        .map(|i| {
            functional.evaluate(
                &series.norms()[i..i + r],
                &series.values()[i * d..(i + r) * d],
                d,
                s,
            )
        })
        .sum())
}

/// Reference disjoint sum for any [`BlockFunctional`].
pub fn brute_force_disjoint_sum<F: BlockFunctional + ?Sized>(
    functional: &F,
    series: &Series,
    layout: &WindowLayout,
    s: f64,
) -> Result<f64> {
    check_scale(s)?;
    check_layout(series, layout)?;
    let (r, d) = (layout.r_n, series.dim());
    Ok((0..layout.m_n)
        .map(|b| {
            functional.evaluate(
                &series.norms()[b * r..(b + 1) * r],
                &series.values()[b * r * d..(b + 1) * r * d],
                d,
                s,
            )
        })
        .sum())
}

fn check_layout(series: &Series, layout: &WindowLayout) -> Result<()> {
    if layout.n != series.len() {
        return Err(Error::InvalidScheme(format!(
            "scheme is for n={}, series has {} points",
            layout.n,
            series.len()
        )));
    }
    Ok(())
}

/// Monotone deque of indices into `data` whose values are strictly decreasing
/// from front to back; the front is the maximum of the current window.
#[derive(Debug)]
pub struct SlidingMax<'a> {
    data: &'a [f64],
    idx: VecDeque<usize>,
}

impl<'a> SlidingMax<'a> {
    pub fn new(data: &'a [f64]) -> Self {
        SlidingMax {
            data,
            idx: VecDeque::new(),
        }
    }

    pub fn push(&mut self, i: usize) {
        let v = self.data[i];
        while let Some(&back) = self.idx.back() {
            if self.data[back] <= v {
                self.idx.pop_back();
            } else {
                break;
            }
        }
        self.idx.push_back(i);
    }

    pub fn expire_before(&mut self, start: usize) {
        while let Some(&front) = self.idx.front() {
            if front < start {
                self.idx.pop_front();
            } else {
                break;
            }
        }
    }

    /// Index of the window maximum. Panics if the window is empty.
    pub fn front(&self) -> usize {
        self.idx[0]
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(v: &[f64]) -> Series {
        Series::univariate(v.to_vec()).unwrap()
    }

    fn ev(f: Functional, v: &[f64], s: f64) -> f64 {
        let series = uni(v);
        eval(&f, &series, 0, v.len(), s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ev(Functional::Exc, &[0.5, 2.0, 3.0], 1.0), 2.0);
        assert_eq!(ev(Functional::StopLoss { eta: 1.5 }, &[2.0, 0.5, 3.0], 1.0), 1.0);
        assert_eq!(ev(Functional::Ruin, &[1.0, -0.5, 2.0], 1.0), 1.0);
        assert_eq!(ev(Functional::LargeDeviation, &[0.6, 0.6], 1.0), 1.0);
        assert_eq!(ev(Functional::ClusterSize { m: 2 }, &[0.5, 2.0, 3.0], 1.0), 1.0);
        assert_eq!(ev(Functional::ExtremalIndicator, &[0.5, 0.9], 1.0), 0.0);
    }

    #[test]
    fn ruin_is_not_total_sum() {
        // partial sums 3, -1: ruin fires, large deviation does not
        assert_eq!(ev(Functional::Ruin, &[3.0, -4.0], 1.0), 1.0);
        assert_eq!(ev(Functional::LargeDeviation, &[3.0, -4.0], 1.0), 0.0);
    }

    #[test]
    fn stop_loss_is_strict() {
        assert_eq!(ev(Functional::StopLoss { eta: 1.0 }, &[2.0], 1.0), 0.0);
        assert_eq!(ev(Functional::StopLoss { eta: 0.99 }, &[2.0], 1.0), 1.0);
    }

    #[test]
    fn univariate_functionals_reject_multivariate() {
        let s = Series::from_points(&[vec![1.0, 2.0], vec![3.0, 4.0]], Default::default()).unwrap();
        let l = WindowLayout::new(2, 1).unwrap();
        for f in [Functional::StopLoss { eta: 1.0 }, Functional::LargeDeviation, Functional::Ruin] {
            assert!(matches!(eval(&f, &s, 0, 2, 1.0), Err(Error::Dimension { .. })));
            assert!(matches!(sliding_sum(&f, &s, &l, 1.0), Err(Error::Dimension { .. })));
        }
        assert_eq!(eval(&Functional::Exc, &s, 0, 2, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn nonpositive_scale_rejected() {
        let s = uni(&[1.0, 2.0]);
        let l = WindowLayout::new(2, 1).unwrap();
        assert!(matches!(eval(&Functional::Exc, &s, 0, 2, 0.0), Err(Error::Scale(_))));
        assert!(matches!(sliding_sum(&Functional::Exc, &s, &l, -1.0), Err(Error::Scale(_))));
        assert!(matches!(disjoint_sum(&Functional::Exc, &s, &l, f64::NAN), Err(Error::Scale(_))));
    }

    #[test]
    fn sliding_and_disjoint_hand_examples() {
        let s = uni(&[5.0, 0.1, 0.2, 6.0, 0.3]);
        let l = WindowLayout::new(5, 2).unwrap();
        assert_eq!(sliding_sum(&Functional::ExtremalIndicator, &s, &l, 0.3).unwrap(), 3.0);
        assert_eq!(disjoint_sum(&Functional::ExtremalIndicator, &s, &l, 0.3).unwrap(), 2.0);
        assert_eq!(sliding_sum(&Functional::Exc, &s, &l, 7.0).unwrap(), 0.0);
        assert_eq!(disjoint_sum(&Functional::Exc, &s, &l, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn grammar_round_trip() {
        for text in ["exc", "extremal", "cluster-size:m=3", "stop-loss:eta=1.5", "large-dev", "ruin"] {
            let f: Functional = text.parse().unwrap();
            assert_eq!(f.to_string(), text);
        }
        assert!("cluster-size:m=0".parse::<Functional>().is_err());
        assert!("stop-loss:eta=-1".parse::<Functional>().is_err());
        assert!("stop-loss".parse::<Functional>().is_err());
        assert!("exc:m=1".parse::<Functional>().is_err());
        assert!("sum".parse::<Functional>().is_err());
        assert_eq!(
            parse_functional_list("extremal, cluster-size:m=1").unwrap(),
            vec![Functional::ExtremalIndicator, Functional::ClusterSize { m: 1 }]
        );
    }

    #[test]
    fn classes() {
        assert!(Functional::Ruin.requires_ansjb());
        assert!(!Functional::ExtremalIndicator.requires_ansjb());
        assert_eq!(Functional::StopLoss { eta: 1.0 }.class(), FunctionalClass::A);
        assert!(!Functional::Exc.is_indicator());
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut acc = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }
}
