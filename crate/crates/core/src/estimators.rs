//! Disjoint and sliding blocks estimators of cluster indices, the tail
//! empirical process, and empirical diagnostics for the anticlustering,
//! summability and small-jump conditions.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{disjoint_sum, sliding_sum, Functional};
use crate::series::{count_exceedances, order_statistic, BlockScheme, Series, Threshold, WindowLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Non-overlapping blocks, order-statistic threshold.
    Disjoint,
    /// All `q_n` windows, order-statistic threshold.
    Sliding,
    /// All windows, fixed threshold with known tail probability.
    SlidingPseudo,
    /// All windows, fixed threshold normalised by the observed exceedance count.
    SlidingQuasi,
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorMode::Disjoint => "disjoint",
            EstimatorMode::Sliding => "sliding",
            EstimatorMode::SlidingPseudo => "sliding-pseudo",
            EstimatorMode::SlidingQuasi => "sliding-quasi",
        })
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "disjoint" => Ok(EstimatorMode::Disjoint),
            "sliding" => Ok(EstimatorMode::Sliding),
            "sliding-pseudo" => Ok(EstimatorMode::SlidingPseudo),
            "sliding-quasi" => Ok(EstimatorMode::SlidingQuasi),
            other => Err(Error::Parse(format!("unknown estimator mode `{other}`"))),
        }
    }
}

/// An estimate of the cluster index `nu*(H)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    pub functional: Functional,
    pub mode: EstimatorMode,
    pub scheme: WindowLayout,
    /// Intermediate sequence, present for the order-statistic modes.
    pub k: Option<usize>,
    pub threshold: Threshold,
    /// Norms strictly above the threshold: over the whole sample, or over
    /// `X_1..X_{q_n}` in quasi mode. Can fall below `k` when there are ties.
    pub exceedance_count_observed: usize,
    /// Set for functionals whose inference also needs the small-jump condition.
    pub requires_ansjb: bool,
}

fn empirical_threshold(series: &Series, scheme: &BlockScheme) -> Result<Threshold> {
    check_scheme(series, scheme)?;
    let threshold = order_statistic(series.norms(), scheme.k)?;
    if threshold.value <= 0.0 {
        return Err(Error::DegenerateThreshold(format!(
            "order statistic for k={} is {}; too many zero norms",
            scheme.k, threshold.value
        )));
    }
    Ok(threshold)
}

fn check_scheme(series: &Series, scheme: &BlockScheme) -> Result<()> {
    if scheme.n != series.len() {
        return Err(Error::InvalidScheme(format!(
            "scheme is for n={}, series has {} points",
            scheme.n,
            series.len()
        )));
    }
    Ok(())
}

/// `(1/k) sum_{i=1}^{m_n} H(X_{(i-1)r_n+1..i r_n} / |X|_(n-k:n))`.
pub fn estimate_disjoint(series: &Series, functional: &Functional, scheme: &BlockScheme) -> Result<EstimateResult> {
    let threshold = empirical_threshold(series, scheme)?;
    let layout = scheme.layout();
    let total = disjoint_sum(functional, series, &layout, threshold.value)?;
    Ok(EstimateResult {
        value: total / scheme.k as f64,
        functional: *functional,
        mode: EstimatorMode::Disjoint,
        scheme: layout,
        k: Some(scheme.k),
        threshold,
        exceedance_count_observed: count_exceedances(series.norms(), threshold.value),
        requires_ansjb: functional.requires_ansjb(),
    })
}

/// `(1/(r_n k)) sum_{i=0}^{q_n-1} H(X_{i+1..i+r_n} / |X|_(n-k:n))`.
pub fn estimate_sliding(series: &Series, functional: &Functional, scheme: &BlockScheme) -> Result<EstimateResult> {
    let threshold = empirical_threshold(series, scheme)?;
    let layout = scheme.layout();
    let total = sliding_sum(functional, series, &layout, threshold.value)?;
    Ok(EstimateResult {
        value: total / (scheme.r_n as f64 * scheme.k as f64),
        functional: *functional,
        mode: EstimatorMode::Sliding,
        scheme: layout,
        k: Some(scheme.k),
        threshold,
        exceedance_count_observed: count_exceedances(series.norms(), threshold.value),
        requires_ansjb: functional.requires_ansjb(),
    })
}

/// Sliding statistic at a fixed threshold `c` with known `p = P(|X_0| > c)`,
/// normalised by `q_n r_n p`.
pub fn estimate_sliding_pseudo(
    series: &Series,
    functional: &Functional,
    r_n: usize,
    c: f64,
    p: f64,
) -> Result<EstimateResult> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("tail probability must lie in (0, 1), got {p}")));
    }
    let layout = WindowLayout::new(series.len(), r_n)?;
    let total = sliding_sum(functional, series, &layout, c)?;
    Ok(EstimateResult {
        value: total / (layout.q_n as f64 * r_n as f64 * p),
        functional: *functional,
        mode: EstimatorMode::SlidingPseudo,
        scheme: layout,
        k: None,
        threshold: Threshold::user(c),
        exceedance_count_observed: count_exceedances(series.norms(), c),
        requires_ansjb: functional.requires_ansjb(),
    })
}

/// Sliding statistic at a fixed threshold `c`, normalised by `r_n` times the
/// number of exceedances of `c` among `X_1..X_{q_n}`.
pub fn estimate_sliding_quasi(series: &Series, functional: &Functional, r_n: usize, c: f64) -> Result<EstimateResult> {
    let layout = WindowLayout::new(series.len(), r_n)?;
    let total = sliding_sum(functional, series, &layout, c)?;
    let observed = count_exceedances(&series.norms()[..layout.q_n], c);
    if observed == 0 {
        return Err(Error::DegenerateThreshold(format!(
            "no exceedances of {c} among the first {} points",
            layout.q_n
        )));
    }
    Ok(EstimateResult {
        value: total / (r_n as f64 * observed as f64),
        functional: *functional,
        mode: EstimatorMode::SlidingQuasi,
        scheme: layout,
        k: None,
        threshold: Threshold::user(c),
        exceedance_count_observed: observed,
        requires_ansjb: functional.requires_ansjb(),
    })
}

/// Dispatches on `mode` for the order-statistic estimators.
pub fn estimate(series: &Series, functional: &Functional, scheme: &BlockScheme, mode: EstimatorMode) -> Result<EstimateResult> {
    match mode {
        EstimatorMode::Disjoint => estimate_disjoint(series, functional, scheme),
        EstimatorMode::Sliding => estimate_sliding(series, functional, scheme),
        other => Err(Error::Parameter(format!(
            "mode `{other}` needs a fixed threshold, not an order statistic"
        ))),
    }
}

/// `T_n(s) = (1/k) sum_{j=1}^{q_n} 1{|X_j| > threshold * s}` on a grid of `s`.
///
/// The threshold is the `k`-th upper order statistic.
pub fn tail_empirical_process(series: &Series, scheme: &BlockScheme, s_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if s_grid.is_empty() {
        return Err(Error::Parameter("empty s grid".into()));
    }
    if let Some(bad) = s_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Parameter(format!("grid points must be positive, got {bad}")));
    }
    let threshold = empirical_threshold(series, scheme)?;
    let mut head = series.norms()[..scheme.q_n].to_vec();
    head.sort_unstable_by(f64::total_cmp);
    let k = scheme.k as f64;
    Ok(s_grid
        .iter()
        .map(|&s| {
            let level = threshold.value * s;
            let above = head.len() - head.partition_point(|&x| x <= level);
            (s, above as f64 / k)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DhRow {
    pub k: usize,
    /// Estimate of `P(max_{k<=|j|<=r_n} |X_j| > c x | |X_0| > c y)`.
    pub p_hat: f64,
    pub anchors: usize,
}

/// Anticlustering diagnostic, averaging over anchors `t` in `[r_n+1, n-r_n]`
/// with `|X_t| > c y`.
pub fn dh_diagnostic(series: &Series, c: f64, x: f64, y: f64, k_grid: &[usize], r_n: usize) -> Result<Vec<DhRow>> {
    for (name, v) in [("c", c), ("x", x), ("y", y)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    if r_n == 0 {
        return Err(Error::Parameter("r_n must be at least 1".into()));
    }
    if let Some(k) = k_grid.iter().find(|&&k| k < 1 || k > r_n) {
        return Err(Error::Parameter(format!("lag {k} outside [1, {r_n}]")));
    }
    let norms = series.norms();
    let n = norms.len();
    if n < 2 * r_n + 1 {
        return Err(Error::NoAnchors);
    }
    let (hi_x, hi_y) = (c * x, c * y);
    // farthest lag l in 1..=r_n with an exceedance of c x on either side, 0 if none
    let farthest: Vec<usize> = (r_n..n - r_n)
        .filter(|&t| norms[t] > hi_y)
        .map(|t| {
            (1..=r_n)
                .rev()
                .find(|&l| norms[t - l] > hi_x || norms[t + l] > hi_x)
                .unwrap_or(0)
        })
        .collect();
    if farthest.is_empty() {
        return Err(Error::NoAnchors);
    }
    let anchors = farthest.len();
    Ok(k_grid
        .iter()
        .map(|&k| DhRow {
            k,
            p_hat: farthest.iter().filter(|&&f| f >= k).count() as f64 / anchors as f64,
            anchors,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SRow {
    pub m: usize,
    /// Estimate of `sum_{j=m}^{r_n} P(|X_0| > c s, |X_j| > c t) / P(|X_0| > c)`.
    pub s_hat: f64,
}

/// Summability diagnostic from empirical pair frequencies. `m` beyond `r_n`
/// gives an empty sum.
pub fn s_condition_diagnostic(series: &Series, c: f64, s: f64, t: f64, m_grid: &[usize], r_n: usize) -> Result<Vec<SRow>> {
    for (name, v) in [("c", c), ("s", s), ("t", t)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    let norms = series.norms();
    let n = norms.len();
    if r_n >= n {
        return Err(Error::Parameter(format!("r_n={r_n} must be below n={n}")));
    }
    let exceed = count_exceedances(norms, c);
    if exceed == 0 {
        return Err(Error::DegenerateThreshold(format!("no exceedances of {c}")));
    }
    let p_hat = exceed as f64 / n as f64;
    let (cs, ct) = (c * s, c * t);
    let mut pairs = vec![0usize; r_n + 1];
    for i in (0..n).filter(|&i| norms[i] > cs) {
        for (j, slot) in pairs.iter_mut().enumerate().take((n - 1 - i).min(r_n) + 1) {
            if norms[i + j] > ct {
                *slot += 1;
            }
        }
    }
    // suffix[m] = sum_{j=m}^{r_n} P_j / p, suffix[r_n + 1] = 0
    let mut suffix = vec![0.0; r_n + 2];
    for j in (0..=r_n).rev() {
        suffix[j] = suffix[j + 1] + pairs[j] as f64 / (n - j) as f64 / p_hat;
    }
    Ok(m_grid
        .iter()
        .map(|&m| SRow {
            m,
            s_hat: suffix.get(m).copied().unwrap_or(0.0),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnsjbRow {
    pub epsilon: f64,
    /// Estimate of `P(sum_{j<=r_n} |X_j| 1{|X_j| <= eps c} > eta c) / (r_n P(|X_0| > c))`.
    pub a_hat: f64,
}

/// Small-jump negligibility diagnostic over disjoint blocks.
pub fn ansjb_diagnostic(series: &Series, c: f64, eta: f64, epsilon_grid: &[f64], r_n: usize) -> Result<Vec<AnsjbRow>> {
    for (name, v) in [("c", c), ("eta", eta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    if let Some(e) = epsilon_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::Parameter(format!("epsilon {e} outside (0, 1]")));
    }
    let layout = WindowLayout::new(series.len(), r_n)?;
    let norms = series.norms();
    let exceed = count_exceedances(norms, c);
    if exceed == 0 {
        return Err(Error::DegenerateThreshold(format!("no exceedances of {c}")));
    }
    let p_hat = exceed as f64 / norms.len() as f64;
    let level = eta * c;
    Ok(epsilon_grid
        .iter()
        .map(|&eps| {
            let cap = eps * c;
            let hits = norms
                .chunks_exact(r_n)
                .take(layout.m_n)
                .filter(|block| {
                    block
                        .iter()
                        .map(|&x| if x <= cap { x } else { 0.0 })
                        .sum::<f64>()
                        > level
                })
                .count();
            AnsjbRow {
                epsilon: eps,
                a_hat: hits as f64 / layout.m_n as f64 / (r_n as f64 * p_hat),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::validate_scheme;

    fn uni(v: &[f64]) -> Series {
        Series::univariate(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_example() {
        let s = uni(&[5.0, 0.1, 0.2, 6.0, 0.3]);
        let (scheme, _) = validate_scheme(5, 2, 2).unwrap();
        let d = estimate_disjoint(&s, &Functional::ExtremalIndicator, &scheme).unwrap();
        assert_eq!(d.threshold.value, 0.3);
        assert_eq!(d.value, 1.0);
        assert_eq!(d.exceedance_count_observed, 2);
        let sl = estimate_sliding(&s, &Functional::ExtremalIndicator, &scheme).unwrap();
        assert_eq!(sl.value, 0.75);
    }

    #[test]
    fn constant_series_exc_disjoint() {
        // ties everywhere: threshold equals the common value, nothing exceeds it
        let s = uni(&[2.0; 10]);
        let (scheme, _) = validate_scheme(10, 3, 1).unwrap();
        let d = estimate_disjoint(&s, &Functional::Exc, &scheme).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.exceedance_count_observed, 0);
    }

    #[test]
    fn exc_interior_exceedances_give_one() {
        let mut v = vec![0.5; 40];
        v[10] = 9.0;
        v[17] = 8.0;
        v[25] = 7.0;
        let s = uni(&v);
        let (scheme, _) = validate_scheme(40, 5, 3).unwrap();
        let e = estimate_sliding(&s, &Functional::Exc, &scheme).unwrap();
        assert_eq!(e.value, 1.0);
        let tep = tail_empirical_process(&s, &scheme, &[1.0, 100.0]).unwrap();
        assert_eq!(tep, vec![(1.0, 1.0), (100.0, 0.0)]);
    }

    #[test]
    fn pseudo_and_quasi() {
        let s = uni(&[0.5, 0.2, 0.3, 0.1]);
        let z = estimate_sliding_pseudo(&s, &Functional::ExtremalIndicator, 2, 1.0, 0.1).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(estimate_sliding_pseudo(&s, &Functional::ExtremalIndicator, 2, 1.0, 1.0).is_err());
        assert!(matches!(
            estimate_sliding_quasi(&s, &Functional::ExtremalIndicator, 2, 1.0),
            Err(Error::DegenerateThreshold(_))
        ));

        let mut v = vec![0.5; 20];
        v[8] = 3.0;
        let q = estimate_sliding_quasi(&uni(&v), &Functional::ExtremalIndicator, 4, 1.0).unwrap();
        assert_eq!(q.value, 1.0);
    }

    #[test]
    fn quasi_mode_rejected_by_dispatch() {
        let s = uni(&[1.0, 2.0, 3.0]);
        let (scheme, _) = validate_scheme(3, 1, 1).unwrap();
        assert!(estimate(&s, &Functional::Exc, &scheme, EstimatorMode::SlidingQuasi).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        let s = uni(&[1.0, 2.0, 3.0]);
        let (scheme, _) = validate_scheme(3, 1, 1).unwrap();
        assert!(tail_empirical_process(&s, &scheme, &[]).is_err());
    }

    #[test]
    fn dh_counts_farthest_lag() {
        // anchors at t=5 (0-based); exceedances at lags -1 and +3
        let mut v = vec![0.1; 11];
        v[5] = 10.0;
        v[4] = 5.0;
        v[8] = 5.0;
        let rows = dh_diagnostic(&uni(&v), 1.0, 1.0, 6.0, &[1, 2, 3, 4], 4).unwrap();
        let p: Vec<f64> = rows.iter().map(|r| r.p_hat).collect();
        assert_eq!(p, vec![1.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            dh_diagnostic(&uni(&v), 1.0, 1.0, 100.0, &[1], 4),
            Err(Error::NoAnchors)
        ));
        assert!(dh_diagnostic(&uni(&v), 1.0, 1.0, 1.0, &[5], 4).is_err());
    }

    #[test]
    fn s_condition_empty_sum_and_error() {
        let v: Vec<f64> = (0..50).map(|i| if i % 7 == 0 { 5.0 } else { 0.5 }).collect();
        let rows = s_condition_diagnostic(&uni(&v), 1.0, 1.0, 1.0, &[1, 7, 8, 11], 10).unwrap();
        assert!(rows[0].s_hat > 0.0);
        assert_eq!(rows[0].s_hat, rows[1].s_hat);
        assert_eq!(rows[2].s_hat, 0.0);
        assert_eq!(rows[3].s_hat, 0.0);
        assert!(s_condition_diagnostic(&uni(&v), 10.0, 1.0, 1.0, &[1], 10).is_err());
    }

    #[test]
    fn ansjb_small_epsilon_is_zero() {
        let v: Vec<f64> = (0..100).map(|i| 0.1 + (i % 10) as f64 * 0.2).collect();
        let rows = ansjb_diagnostic(&uni(&v), 1.0, 1.0, &[0.01, 1.0], 10).unwrap();
        // 10 * 0.01 * c < eta * c
        assert_eq!(rows[0].a_hat, 0.0);
        assert!(rows[1].a_hat > 0.0);
        assert!(ansjb_diagnostic(&uni(&v), 100.0, 1.0, &[0.5], 10).is_err());
        assert!(ansjb_diagnostic(&uni(&v), 1.0, 1.0, &[1.5], 10).is_err());
    }
}
