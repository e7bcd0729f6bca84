//! Seeded, portable pseudo-random sampling of feature index sets.
//!
//! The generator is ChaCha8 (via `rand_chacha`), seeded with
//! `SeedableRng::seed_from_u64`, so a given seed produces the same draw
//! sequence on every platform. Parallel tree training derives one child
//! generator per tree index from the master seed using a SplitMix64 hash
//! (`child_seed = splitmix64(master ^ splitmix64(index + 1))`), which makes
//! results independent of thread scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scores::FeatureDistribution;

/// SplitMix64 output function (Vigna). Used for seed mixing only.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic random generator with documented, portable semantics.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this generator was constructed with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child generator for the given index. Children with
    /// distinct indices have unrelated streams regardless of how much of
    /// the parent stream has been consumed.
    pub fn child(&self, index: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Unbiased (Lemire's method with rejection).
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below requires n > 0");
        let n = n as u64;
        let mut x = self.inner.next_u64();
        let mut m = (x as u128) * (n as u128);
        let mut lo = m as u64;
        if lo < n {
            let threshold = n.wrapping_neg() % n;
            while lo < threshold {
                x = self.inner.next_u64();
                m = (x as u128) * (n as u128);
                lo = m as u64;
            }
        }
        (m >> 64) as usize
    }

    /// Standard normal draw via Box-Muller (two uniforms per call).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }
}

/// A set of k distinct feature indices, stored sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset {
    indices: Vec<usize>,
}

impl FeatureSubset {
    /// Builds a subset from arbitrary distinct indices, all < `d`.
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidConfig("feature subset is empty".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(
                "feature subset has duplicate indices".into(),
            ));
        }
        if *indices.last().unwrap() >= d {
            return Err(Error::InvalidConfig(format!(
                "feature index {} out of range for d = {}",
                indices.last().unwrap(),
                d
            )));
        }
        Ok(Self { indices })
    }

    /// The identity subset 0..d (used by the random-forest mode).
    pub fn full(d: usize) -> Self {
        Self {
            indices: (0..d).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self, d: usize) -> bool {
        self.indices.len() == d
    }
}

/// Draws k distinct feature indices from `dist` without replacement.
///
/// Semantics: draw one index proportionally to the remaining weights, remove
/// it, renormalize, repeat. Zero-probability features are drawn (uniformly)
/// only once every positive-probability feature has been taken, so that the
/// result always has exactly k indices.
pub fn sample_without_replacement(
    dist: &FeatureDistribution,
    k: usize,
    rng: &mut SeededRng,
) -> Result<FeatureSubset> {
    let d = dist.len();
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!(
            "cannot sample k = {k} features from d = {d}"
        )));
    }
    let probs = dist.probs();
    let mut taken = vec![false; d];
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = (0..d).filter(|&j| !taken[j]).map(|j| probs[j]).sum();
        let pick = if total > 0.0 {
            let u = rng.next_f64() * total;
            let mut cum = 0.0;
            let mut last_positive = None;
            let mut found = None;
            for j in 0..d {
                if taken[j] || probs[j] <= 0.0 {
                    continue;
                }
                last_positive = Some(j);
                cum += probs[j];
                if u < cum {
                    found = Some(j);
                    break;
                }
            }
            // Rounding can leave u marginally past the final cumulative sum.
            found
                .or(last_positive)
                .expect("positive total implies a positive weight")
        } else {
            // Positive support exhausted: pad uniformly from the zero-mass rest.
            let pool: Vec<usize> = (0..d).filter(|&j| !taken[j]).collect();
            pool[rng.next_below(pool.len())]
        };
        taken[pick] = true;
        chosen.push(pick);
    }
    FeatureSubset::new(chosen, d)
}

/// Draws k independent categorical samples from `dist` (duplicates possible),
/// in draw order.
pub fn sample_with_replacement(
    dist: &FeatureDistribution,
    k: usize,
    rng: &mut SeededRng,
) -> Vec<usize> {
    assert!(k >= 1, "sample_with_replacement requires k >= 1");
    let probs = dist.probs();
    let total: f64 = probs.iter().sum();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let u = rng.next_f64() * total;
        let mut cum = 0.0;
        let mut pick = None;
        let mut last_positive = None;
        for (j, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            last_positive = Some(j);
            cum += p;
            if u < cum {
                pick = Some(j);
                break;
            }
        }
        out.push(
            pick.or(last_positive)
                .expect("distribution has positive mass"),
        );
    }
    out
}
