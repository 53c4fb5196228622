//! Numerical checks against independently derived values: closed forms,
//! exact finite-sample formulas and simulation oracles.

mod common;

use slidingblocks::estimators::{
    ansjb_diagnostic, dh_diagnostic, estimate_disjoint, estimate_sliding, estimate_sliding_pseudo, s_condition_diagnostic,
    tail_empirical_process,
};
use slidingblocks::mc::{rng_from_seed, McEstimate};
use slidingblocks::oracle::{
    analytic, candidate_extremal_index, cluster_index_mc, cluster_size_distribution, conditional_simulation_oracle,
    sample_q, sum_exceedance_probabilities, ConditionalThreshold, TailProcessModel,
};
use slidingblocks::series::{count_exceedances, order_statistic};
use slidingblocks::simulate::pareto_sample;
use slidingblocks::{generate, validate_scheme, Functional, ProcessKind, ProcessSpec, Series};

const IID: ProcessKind = ProcessKind::IidPareto { alpha: 1.0 };
const AR: ProcessKind = ProcessKind::Ar1 { rho: 0.5, alpha: 1.0 };

fn simulate(kind: ProcessKind, n: usize, seed: u64) -> Series {
    generate(&ProcessSpec::new(kind, n, seed)).unwrap()
}

fn proportion(hits: usize, total: usize) -> McEstimate {
    let p = hits as f64 / total as f64;
    McEstimate {
        value: p,
        stderr: (p * (1.0 - p) / total as f64).sqrt(),
    }
}

/// `P(no exceedance in a fixed set of r points)` when the k exceedances of an
/// exchangeable sample of size n sit at uniformly random positions.
fn hypergeometric_miss(n: usize, r: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - r - i) as f64 / (n - i) as f64).product()
}

#[test]
fn pareto_sampler_tail_and_quantile() {
    let mut rng = rng_from_seed(11);
    let draws: Vec<f64> = (0..1_000_000).map(|_| pareto_sample(1.0, &mut rng)).collect();
    let p = proportion(draws.iter().filter(|&&x| x > 10.0).count(), draws.len());
    assert!(p.agrees_with_value(0.1, 3.0), "{p:?}");
    // 1 - F(x) = 1/x: the 1e3-th upper order statistic of 1e5 draws sits near 100
    let q = order_statistic(&draws[..100_000], 1000).unwrap().value;
    assert!((q / 100.0 - 1.0).abs() < 0.05, "{q}");
}

#[test]
fn ar1_marginal_is_regularly_varying() {
    let s = simulate(AR, 1_000_000, 5);
    let scaled: Vec<f64> = [100.0, 200.0, 500.0, 1000.0]
        .iter()
        .map(|&u| count_exceedances(s.norms(), u) as f64 / s.len() as f64 * u)
        .collect();
    // P(X > u) ~ u^{-1} / (1 - rho): the product is flat near 2
    for v in &scaled {
        assert!((v / scaled[0] - 1.0).abs() < 0.15, "{scaled:?}");
        assert!((v - 2.0).abs() < 0.3, "{scaled:?}");
    }
}

#[test]
fn tail_empirical_process_at_two() {
    let s = simulate(IID, 100_000, 21);
    let (scheme, _) = validate_scheme(s.len(), 10, 1000).unwrap();
    let t = tail_empirical_process(&s, &scheme, &[1.0, 2.0]).unwrap();
    assert!((t[1].1 / 0.5 - 1.0).abs() < 0.1, "{t:?}");
}

#[test]
fn iid_extremal_index_estimates() {
    let s = simulate(IID, 100_000, 31);
    let f = Functional::ExtremalIndicator;
    // with r_n k / n = 0.1 the finite-sample bias is about 5%
    let (scheme, _) = validate_scheme(s.len(), 10, 1000).unwrap();
    for v in [estimate_disjoint(&s, &f, &scheme).unwrap().value, estimate_sliding(&s, &f, &scheme).unwrap().value] {
        assert!((0.9..=1.1).contains(&v), "{v}");
    }
    // at r_n k / n = 1 the estimators concentrate on the exact occupancy value
    // (1 - P(no exceedance in a block)) * blocks / k, near 1 - e^{-1}
    let (scheme, _) = validate_scheme(s.len(), 100, 1000).unwrap();
    let miss = hypergeometric_miss(scheme.n, scheme.r_n, scheme.k);
    let disjoint_oracle = scheme.m_n as f64 * (1.0 - miss) / scheme.k as f64;
    let sliding_oracle = scheme.q_n as f64 * (1.0 - miss) / (scheme.r_n * scheme.k) as f64;
    let d = estimate_disjoint(&s, &f, &scheme).unwrap().value;
    let sl = estimate_sliding(&s, &f, &scheme).unwrap().value;
    assert!((d / disjoint_oracle - 1.0).abs() < 0.05, "{d} vs {disjoint_oracle}");
    assert!((sl / sliding_oracle - 1.0).abs() < 0.05, "{sl} vs {sliding_oracle}");
    assert!((sliding_oracle - (1.0 - (-1.0f64).exp())).abs() < 0.01);
}

#[test]
fn pseudo_estimator_with_known_tail_probability() {
    let s = simulate(IID, 100_000, 41);
    let exc = estimate_sliding_pseudo(&s, &Functional::Exc, 100, 100.0, 0.01).unwrap().value;
    assert!((exc - 1.0).abs() < 0.1, "{exc}");
    // r_n p = 1 here: the extremal indicator converges to (1 - (1-p)^{r_n}) / (r_n p)
    let ext = estimate_sliding_pseudo(&s, &Functional::ExtremalIndicator, 100, 100.0, 0.01).unwrap().value;
    let occupancy = 1.0 - 0.99f64.powi(100);
    assert!((ext / occupancy - 1.0).abs() < 0.1, "{ext} vs {occupancy}");
    // and to 1 once r_n p is small
    let ext = estimate_sliding_pseudo(&s, &Functional::ExtremalIndicator, 10, 100.0, 0.01).unwrap().value;
    assert!((ext - 1.0).abs() < 0.15, "{ext}");
}

#[test]
fn dh_diagnostic_against_independence_and_ar1() {
    let r = 20;
    let lags = [1, 5, 10, 20];
    let iid = simulate(IID, 200_000, 51);
    let c = order_statistic(iid.norms(), 2000).unwrap().value;
    let p_x = count_exceedances(iid.norms(), c) as f64 / iid.len() as f64;
    let rows = dh_diagnostic(&iid, c, 1.0, 1.0, &lags, r).unwrap();
    for row in &rows {
        let expected = 1.0 - (1.0 - p_x).powi(2 * (r - row.k + 1) as i32);
        let se = (expected * (1.0 - expected) / row.anchors as f64).sqrt();
        assert!((row.p_hat - expected).abs() < 4.0 * se, "{row:?} vs {expected}");
    }
    let ar = simulate(ProcessKind::Ar1 { rho: 0.9, alpha: 1.0 }, 200_000, 52);
    let c = order_statistic(ar.norms(), 2000).unwrap().value;
    let ar_rows = dh_diagnostic(&ar, c, 1.0, 1.0, &lags, r).unwrap();
    assert!(ar_rows[0].p_hat > rows[0].p_hat + 0.3, "{ar_rows:?} vs {rows:?}");
}

#[test]
fn s_diagnostic_against_independence() {
    let r = 20;
    let s = simulate(IID, 1_000_000, 61);
    let c = order_statistic(s.norms(), 10_000).unwrap().value;
    let p = count_exceedances(s.norms(), c) as f64 / s.len() as f64;
    let rows = s_condition_diagnostic(&s, c, 1.0, 1.0, &[1, 10, 20, 21], r).unwrap();
    for row in &rows[..3] {
        let expected = (r - row.m + 1) as f64 * p;
        assert!((row.s_hat / expected - 1.0).abs() < 0.12, "{row:?} vs {expected}");
    }
    assert_eq!(rows[3].s_hat, 0.0);
}

#[test]
fn ansjb_diagnostic_for_infinite_mean_noise() {
    let s = simulate(ProcessKind::IidPareto { alpha: 0.8 }, 200_000, 71);
    let c = order_statistic(s.norms(), 2000).unwrap().value;
    let r = 100;
    let rows = ansjb_diagnostic(&s, c, 1.0, &[0.005, 0.1, 0.5], r).unwrap();
    // eps r_n < eta: the truncated sum can never exceed eta c
    assert_eq!(rows[0].a_hat, 0.0);
    assert!(rows[2].a_hat > 0.05, "{rows:?}");
    assert!(rows[1].a_hat <= rows[2].a_hat);
}

#[test]
fn ar1_tail_process_paths() {
    let m = TailProcessModel::new(AR).unwrap();
    let mut rng = rng_from_seed(3);
    let mut backward = 0usize;
    let total = 100_000;
    for _ in 0..total {
        let p = m.sample_tail_path(&mut rng);
        assert!(p.at(0) >= 1.0);
        assert_eq!(p.at(1), p.at(0) / 2.0);
        assert_eq!(p.at(2), p.at(0) / 4.0);
        if p.at(-1) != 0.0 {
            assert_eq!(p.at(-1), 2.0 * p.at(0));
            backward += 1;
        }
    }
    let freq = proportion(backward, total);
    assert!(freq.agrees_with_value(0.5, 3.0), "{freq:?}");
}

#[test]
fn conditional_simulation_agrees_with_tail_model() {
    let horizon = 3;
    let law = conditional_simulation_oracle(&ProcessSpec::new(AR, 2_000_000, 81), ConditionalThreshold::Quantile(0.999), horizon)
        .unwrap();
    let m = TailProcessModel::new(AR).unwrap();
    let mut rng = rng_from_seed(82);
    let paths: Vec<_> = (0..100_000).map(|_| m.sample_tail_path(&mut rng)).collect();
    let events: [(isize, f64); 6] = [(-1, 0.5), (-1, 2.0), (-2, 1.0), (1, 0.75), (1, 1.0), (2, 0.5)];
    for (j, a) in events {
        let empirical = law.probability(|p| law.at(p, j) > a);
        let model = proportion(paths.iter().filter(|p| p.at(j) > a).count(), paths.len());
        assert!(empirical.agrees_with(&model, 3.0), "Y_{j} > {a}: {empirical:?} vs {model:?}");
    }
    let backward = law.probability(|p| law.at(p, -1) > 0.5);
    assert!(backward.agrees_with_value(0.5, 3.0), "{backward:?}");
}

#[test]
fn conditional_forward_ratio() {
    // alpha = 2 so that the innovation entering X_{t+1} has a finite mean
    let kind = ProcessKind::Ar1 { rho: 0.5, alpha: 2.0 };
    let law = conditional_simulation_oracle(&ProcessSpec::new(kind, 3_000_000, 91), ConditionalThreshold::Quantile(0.9999), 1)
        .unwrap();
    let ratio = law.mean(|p| law.at(p, 1) / law.at(p, 0));
    assert!((ratio.value / 0.5 - 1.0).abs() < 0.05, "{ratio:?}");
}

#[test]
fn candidate_extremal_index_and_exceedance_sums() {
    for (kind, theta, sum) in [
        (IID, 1.0, 1.0),
        (AR, 0.5, 3.0),
        (ProcessKind::Ar1 { rho: 0.5, alpha: 2.0 }, 0.75, 5.0 / 3.0),
        // MA(1), b <= 1: theta = 1/(1+b^alpha), sum = 1 + 2 b^alpha / (1+b^alpha)
        (ProcessKind::Ma { coeffs: vec![1.0, 0.5], alpha: 1.0 }, 2.0 / 3.0, 5.0 / 3.0),
    ] {
        let m = TailProcessModel::new(kind.clone()).unwrap();
        let t = candidate_extremal_index(&m, 100_000, 1).mc();
        assert!(t.agrees_with_value(theta, 3.0), "{kind}: {t:?}");
        let s = sum_exceedance_probabilities(&m, 100_000, 2).mc();
        assert!(s.agrees_with_value(sum, 3.0), "{kind}: {s:?}");
    }
}

#[test]
fn cluster_size_law_for_ar1() {
    let m = TailProcessModel::new(AR).unwrap();
    let law = cluster_size_distribution(&m, 4, 100_000, 7).unwrap();
    // independent closed form: given no earlier exceedance, exc = #{j >= 0 : Y_0 2^{-j} > 1}
    // and P(Y_0 in (2^{m-1}, 2^m]) = 2^{1-m} - 2^{-m}
    for (i, est) in law.pi.iter().enumerate() {
        let m = i as i32 + 1;
        let expected = 2f64.powi(1 - m) - 2f64.powi(-m);
        assert!(est.agrees_with_value(expected, 3.0), "pi({m}) = {est:?} vs {expected}");
    }
    assert!(law.mean.agrees_with_value(2.0, 3.0), "{:?}", law.mean);
    assert!(law.acceptance.agrees_with_value(0.5, 3.0), "{:?}", law.acceptance);
}

#[test]
fn anchored_paths_peak_at_zero() {
    let m = TailProcessModel::new(AR).unwrap();
    let mut rng = rng_from_seed(8);
    for _ in 0..2000 {
        let (path, draws) = sample_q(&m, &mut rng).unwrap();
        assert!(draws >= 1);
        let peak = path.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_eq!(peak, path.at(0).abs());
        assert!(path.values[..path.lag].iter().all(|v| v.abs() < path.at(0).abs()));
    }
}

#[test]
fn cluster_indices_against_closed_forms() {
    let iid = TailProcessModel::new(IID).unwrap();
    let ld = cluster_index_mc(&iid, &Functional::LargeDeviation, 20_000, 1).unwrap();
    assert!(ld.agrees_with_value(1.0, 3.0), "{ld:?}");
    let ar = TailProcessModel::new(AR).unwrap();
    let ext = cluster_index_mc(&ar, &Functional::ExtremalIndicator, 100_000, 2).unwrap();
    assert!(ext.agrees_with_value(0.5, 3.0), "{ext:?}");
    // AR(1): stop-loss level y* with y* + y*/2 - 2 = 1 is 2, so nu* = theta / 2
    let sl = cluster_index_mc(&ar, &Functional::StopLoss { eta: 1.0 }, 100_000, 3).unwrap();
    assert!(sl.agrees_with_value(0.25, 3.0), "{sl:?}");
    let closed = analytic::nu_star(&AR, &Functional::StopLoss { eta: 1.0 }).unwrap();
    assert!((closed - 0.25).abs() < 1e-12, "{closed}");
}
