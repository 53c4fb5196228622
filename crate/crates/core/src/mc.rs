//! Seeding and deterministic parallel Monte Carlo reduction.
//!
//! Work is split into fixed-size chunks, each driven by its own stream
//! derived from `(master, tag, chunk)`. Chunk results are merged in chunk
//! order, so the output does not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub type Rng = ChaCha8Rng;

/// Samples per chunk.
pub const CHUNK: u64 = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream tag and an index.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable tag for a named stream.
pub fn tag(name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate { value, stderr: 0.0 }
    }

    /// `|self - other| <= z * sqrt(se1^2 + se2^2)`, with a rounding allowance.
    pub fn agrees_with(&self, other: &McEstimate, z: f64) -> bool {
        let tol = z * self.stderr.hypot(other.stderr);
        (self.value - other.value).abs() <= tol + 1e-12 * self.value.abs().max(1.0)
    }

    pub fn agrees_with_value(&self, value: f64, z: f64) -> bool {
        self.agrees_with(&McEstimate::exact(value), z)
    }
}

/// Running first and second moments of several coordinates.
#[derive(Debug, Clone)]
pub struct Moments {
    pub count: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        for (i, v) in x.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
    }

    pub fn estimate(&self, i: usize) -> McEstimate {
        let n = self.count as f64;
        let mean = self.sum[i] / n;
        let var = if self.count > 1 {
            ((self.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }

    pub fn estimates(&self) -> Vec<McEstimate> {
        (0..self.sum.len()).map(|i| self.estimate(i)).collect()
    }
}

/// Draws `samples` observations of a `dim`-vector, `sample` writing one
/// observation into the provided buffer, and returns the merged moments.
pub fn sample_moments<F>(samples: u64, dim: usize, master: u64, stream: u64, sample: F) -> Moments
where
    F: Fn(&mut Rng, &mut [f64]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(master, stream, c));
            let len = CHUNK.min(samples - c * CHUNK);
            let mut m = Moments::new(dim);
            let mut buf = vec![0.0; dim];
            for _ in 0..len {
                buf.iter_mut().for_each(|b| *b = 0.0);
                sample(&mut rng, &mut buf);
                m.push(&buf);
            }
            m
        })
        .collect();
    let mut total = Moments::new(dim);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Scalar convenience wrapper around [`sample_moments`].
pub fn mc_mean<F>(samples: u64, master: u64, stream: u64, sample: F) -> McEstimate
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    sample_moments(samples, 1, master, stream, |rng, out| out[0] = sample(rng)).estimate(0)
}

/// Runs `f` inside a pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 2, 3);
        assert_ne!(a, derive_seed(1, 2, 4));
        assert_ne!(a, derive_seed(1, 3, 3));
        assert_ne!(a, derive_seed(2, 2, 3));
        assert_eq!(a, derive_seed(1, 2, 3));
    }

    #[test]
    fn uniform_mean() {
        let est = mc_mean(100_000, 7, tag("u"), |rng| rng.gen::<f64>());
        assert!(est.agrees_with_value(0.5, 4.0));
        assert!((est.stderr - (1.0f64 / 12.0 / 1e5).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn independent_of_worker_count() {
        let run = |w| with_workers(Some(w), || mc_mean(50_000, 11, 5, |rng| rng.gen::<f64>()));
        assert_eq!(run(1), run(4));
    }
}
