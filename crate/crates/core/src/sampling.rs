//! Seeded i.i.d. index sampling with replacement and the mini-batch
//! stochastic mapping `T_ξ(x) = (1/b) Σ_j T_{ξ_j}(x)`.
//!
//! Each (seed, iteration) pair owns an independent ChaCha stream, so the
//! draw at iteration `k` depends only on the seed, `k`, `n` and `b_k`.
//! Changing the batch size at one iteration never perturbs another.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::family::FiniteFamily;
use crate::point::{check_dim, Point};

/// A per-trial master seed. Value-like; clone freely across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The generator for iteration `k`.
    pub fn rng_at(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    /// Seed of trial `t` of an ensemble driven by this master seed.
    pub fn trial(&self, t: u64) -> SeedStream {
        SeedStream::new(splitmix64(
            self.seed ^ splitmix64(t.wrapping_add(0x5851_F42D_4C95_7F2D)),
        ))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The sampled indices `ξ_k = (ξ_{k,1}, …, ξ_{k,b})`, zero-based, duplicates
/// allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchDraw {
    k: u64,
    indices: Vec<usize>,
}

impl BatchDraw {
    /// A draw with prescribed indices, e.g. to evaluate a specific batch.
    pub fn new(k: u64, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("batch draw"));
        }
        Ok(BatchDraw { k, indices })
    }

    pub fn iteration(&self) -> u64 {
        self.k
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

    /// Multiplicity of each component index.
    pub fn counts(&self, n: usize) -> Result<BatchCounts> {
        let mut counts = vec![0u64; n];
        for &i in &self.indices {
            *counts
                .get_mut(i)
                .ok_or(Error::IndexOutOfRange { index: i, n })? += 1;
        }
        Ok(BatchCounts {
            k: self.k,
            counts,
            size: self.indices.len() as u64,
        })
    }
}

/// How many times each component was drawn. The mini-batch mapping depends
/// on a draw only through these counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchCounts {
    k: u64,
    counts: Vec<u64>,
    size: u64,
}

impl BatchCounts {
    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// `(i, count_i / b)` for every drawn index, ascending in `i`.
    pub fn weights(&self) -> Vec<(usize, f64)> {
        let b = self.size as f64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c as f64 / b))
            .collect()
    }
}

/// Draws `b` indices i.i.d. uniform on `{0, …, n−1}` with replacement.
pub fn sample_batch(stream: &SeedStream, k: u64, n: usize, b: u64) -> BatchDraw {
    assert!(n >= 1 && b >= 1, "sample_batch needs n >= 1 and b >= 1");
    let mut rng = stream.rng_at(k);
    let indices = (0..b).map(|_| rng.random_range(0..n)).collect();
    BatchDraw { k, indices }
}

/// Draws the counts of a size-`b` i.i.d. uniform batch over `n` components.
///
/// For `b ≤ n` the indices are drawn one by one; otherwise the counts are
/// drawn directly from the multinomial distribution by sequential binomial
/// splitting, which has the same law and costs O(n) instead of O(b).
pub fn sample_counts(stream: &SeedStream, k: u64, n: usize, b: u64) -> BatchCounts {
    assert!(n >= 1 && b >= 1, "sample_counts needs n >= 1 and b >= 1");
    if b <= n as u64 {
        return sample_batch(stream, k, n, b)
            .counts(n)
            .expect("sampled indices are in range");
    }
    let mut rng = stream.rng_at(k);
    let mut counts = vec![0u64; n];
    let mut remaining = b;
    for (i, slot) in counts.iter_mut().enumerate().take(n - 1) {
        if remaining == 0 {
            break;
        }
        let p = 1.0 / (n - i) as f64;
        let c = Binomial::new(remaining, p)
            .expect("valid binomial parameters")
            .sample(&mut rng);
        *slot = c;
        remaining -= c;
    }
    counts[n - 1] += remaining;
    BatchCounts { k, counts, size: b }
}

/// Writes `T_ξ(x)` for the given counts into `out`.
pub fn apply_counts_into<F: FiniteFamily + ?Sized>(
    family: &F,
    counts: &BatchCounts,
    x: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) {
    family.weighted_sum_into(&counts.weights(), x, out, scratch);
}

/// The mini-batch stochastic mapping `T_ξ(x) = (1/b) Σ_j T_{ξ_j}(x)`,
/// accumulated per distinct index in ascending order.
pub fn apply_mini_batch<F: FiniteFamily + ?Sized>(
    family: &F,
    draw: &BatchDraw,
    x: &Point,
) -> Result<Point> {
    check_dim(family.dim(), x.dim())?;
    let counts = draw.counts(family.len())?;
    let mut out = vec![0.0; family.dim()];
    let mut scratch = vec![0.0; family.dim()];
    apply_counts_into(family, &counts, x, &mut out, &mut scratch);
    Point::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::exact_mean_apply;
    use crate::mappings::{make_projection_family, Halfspace};

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn interval_family() -> crate::family::MappingFamily {
        make_projection_family(&[
            Halfspace::new(p(&[1.0]), 0.0).unwrap(),
            Halfspace::new(p(&[-1.0]), -1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_component_support() {
        let s = SeedStream::new(4);
        let d = sample_batch(&s, 0, 1, 17);
        assert!(d.indices().iter().all(|&i| i == 0));
        let c = sample_counts(&s, 3, 1, 1000);
        assert_eq!(c.counts(), &[1000]);
        assert_eq!(c.weights(), vec![(0, 1.0)]);
    }

    #[test]
    fn indices_in_range() {
        let s = SeedStream::new(11);
        for k in 0..50 {
            let d = sample_batch(&s, k, 5, 3);
            assert_eq!(d.len(), 3);
            assert!(d.indices().iter().all(|&i| i < 5));
        }
    }

    #[test]
    fn binary_frequency_concentrates() {
        for seed in [1u64, 2, 3, 42, 2024] {
            let d = sample_batch(&SeedStream::new(seed), 0, 2, 100_000);
            let freq = d.indices().iter().filter(|&&i| i == 0).count() as f64 / 1e5;
            assert!((0.49..=0.51).contains(&freq), "seed {seed}: {freq}");
        }
    }

    #[test]
    fn draws_are_reproducible_and_stream_separated() {
        let s = SeedStream::new(99);
        assert_eq!(sample_batch(&s, 7, 10, 64), sample_batch(&s, 7, 10, 64));
        assert_ne!(sample_batch(&s, 7, 10, 64), sample_batch(&s, 8, 10, 64));
        assert_ne!(
            sample_batch(&s.trial(0), 7, 10, 64),
            sample_batch(&s.trial(1), 7, 10, 64)
        );
        assert_eq!(
            sample_counts(&s, 5, 3, 10_000),
            sample_counts(&s, 5, 3, 10_000)
        );
    }

    #[test]
    fn multinomial_counts_sum_to_batch() {
        let s = SeedStream::new(5);
        for k in 0..100 {
            let c = sample_counts(&s, k, 7, 1000 + k);
            assert_eq!(c.counts().iter().sum::<u64>(), 1000 + k);
        }
    }

    #[test]
    fn multinomial_marginals_are_uniform() {
        let s = SeedStream::new(8);
        let n = 4;
        let draws = 20_000u64;
        let mut totals = vec![0u64; n];
        for k in 0..draws {
            for (t, c) in totals.iter_mut().zip(sample_counts(&s, k, n, 10).counts()) {
                *t += c;
            }
        }
        // each total ~ Binomial(200000, 1/4): sd ~ 194
        for t in totals {
            assert!((t as f64 - 50_000.0).abs() < 1000.0, "{t}");
        }
    }

    #[test]
    fn mini_batch_examples() {
        let fam = interval_family();
        let x = p(&[0.5]);
        let same = BatchDraw::new(0, vec![1, 1, 1]).unwrap();
        assert_eq!(
            apply_mini_batch(&fam, &same, &x).unwrap(),
            fam.apply_component(1, &x).unwrap()
        );
        let both = BatchDraw::new(0, vec![0, 1]).unwrap();
        assert_eq!(apply_mini_batch(&fam, &both, &x).unwrap().coords(), &[0.5]);
        let x = p(&[2.0]);
        assert_eq!(
            apply_mini_batch(&fam, &both, &x).unwrap(),
            exact_mean_apply(&fam, &x).unwrap()
        );
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let fam = interval_family();
        let bad = BatchDraw::new(0, vec![0, 2]).unwrap();
        assert!(matches!(
            apply_mini_batch(&fam, &bad, &p(&[0.0])),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert!(BatchDraw::new(0, vec![]).is_err());
    }
}
