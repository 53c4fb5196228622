//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidingblocks::{Functional, Series};

/// Direct evaluation of each functional on `x / s`, with plain summation.
pub fn naive_eval(f: &Functional, block: &[f64], s: f64) -> f64 {
    let exceed = block.iter().filter(|x| x.abs() / s > 1.0).count();
    let ind = |b: bool| b as u8 as f64;
    match *f {
        Functional::Exc => exceed as f64,
        Functional::ExtremalIndicator => ind(exceed > 0),
        Functional::ClusterSize { m } => ind(exceed == m),
        Functional::StopLoss { eta } => ind(block.iter().map(|x| (x / s - 1.0).max(0.0)).sum::<f64>() > eta),
        Functional::LargeDeviation => ind(block.iter().map(|x| x / s).sum::<f64>() > 1.0),
        Functional::Ruin => {
            let mut partial = 0.0;
            let mut best = 0.0f64;
            for x in block {
                partial += x / s;
                best = best.max(partial);
            }
            ind(best > 1.0)
        }
    }
}

/// `sum_{i=0}^{n-r} H(x_{i..i+r} / s)` by a double loop.
pub fn naive_sliding(f: &Functional, xs: &[f64], r: usize, s: f64) -> f64 {
    (0..=xs.len() - r).map(|i| naive_eval(f, &xs[i..i + r], s)).sum()
}

/// `sum_{b < n/r} H(x_{br..(b+1)r} / s)`, dropping the trailing partial block.
pub fn naive_disjoint(f: &Functional, xs: &[f64], r: usize, s: f64) -> f64 {
    xs.chunks_exact(r).map(|b| naive_eval(f, b, s)).sum()
}

/// `x_(n-k:n)` by a full sort.
pub fn sorted_order_statistic(xs: &[f64], k: usize) -> f64 {
    let mut v: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    v.sort_by(f64::total_cmp);
    v[v.len() - k - 1]
}

pub fn all_functionals() -> Vec<Functional> {
    vec![
        Functional::Exc,
        Functional::ExtremalIndicator,
        Functional::ClusterSize { m: 1 },
        Functional::ClusterSize { m: 2 },
        Functional::StopLoss { eta: 1.5 },
        Functional::LargeDeviation,
        Functional::Ruin,
    ]
}

/// Signed heavy-tailed data: Pareto(1) magnitudes with random signs and a
/// sprinkling of small values, so every functional changes value somewhere.
pub fn random_signed(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let mag = if rng.gen_bool(0.3) { u } else { 1.0 / u };
            if rng.gen_bool(0.25) {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

pub fn series(xs: &[f64]) -> Series {
    Series::univariate(xs.to_vec()).unwrap()
}
