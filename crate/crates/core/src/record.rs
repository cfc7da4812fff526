//! Run traces and Monte-Carlo aggregates.

use crate::point::Point;

/// One recorded iteration of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    /// Step size `α_k` used to move from `x_k` to `x_{k+1}`.
    pub alpha: f64,
    /// Batch size `b_k`; zero for deterministic methods.
    pub batch_size: u64,
    /// `‖x_k − T(x_k)‖` with the exact mean.
    pub residual: f64,
    /// `f0(x_k) = ½‖x_k − x0‖²`
    pub f0_value: f64,
    /// `‖x_k − x*‖²` when an oracle point is available.
    pub dist_sq: Option<f64>,
    /// `‖x_{k+1} − x_k‖`; absent at the final iterate.
    pub next_step_len: Option<f64>,
    /// `‖T_{ξ_k}(x_k) − x*‖²` for the mapping value the update used.
    pub sample_dist_sq: Option<f64>,
}

/// Trace of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub iterations: Vec<IterationRecord>,
    pub final_point: Point,
    pub seed: u64,
    /// Position in `iterations` of the smallest recorded `f0` value.
    pub best_f0_index: usize,
}

impl RunRecord {
    pub fn last(&self) -> &IterationRecord {
        self.iterations
            .last()
            .expect("a run records at least one iteration")
    }

    pub fn ks(&self) -> impl Iterator<Item = u64> + '_ {
        self.iterations.iter().map(|r| r.k)
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Mean and standard error from the unbiased sample variance. Summation
    /// runs in slice order. Identical samples give exactly that value with a
    /// zero standard error.
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Estimate {
                mean: xs[0],
                se: 0.0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate { mean, se: 0.0 };
        }
        let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        let var = ss / (n - 1) as f64;
        Estimate {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }

    pub fn missing() -> Estimate {
        Estimate {
            mean: f64::NAN,
            se: f64::NAN,
        }
    }
}

/// Per-recorded-iteration aggregates over independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub trial_count: usize,
    pub ks: Vec<u64>,
    pub alphas: Vec<f64>,
    pub batches: Vec<u64>,
    pub residual: Vec<Estimate>,
    /// Signed `f0(x_k) − f0*`.
    pub f0_gap: Vec<Estimate>,
    pub dist_sq: Vec<Estimate>,
    pub next_step_len: Vec<Estimate>,
    pub sample_dist_sq: Vec<Estimate>,
    pub f0_star: Option<f64>,
}

impl EnsembleStats {
    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Position of iteration `k` among the recorded iterations.
    pub fn position(&self, k: u64) -> Option<usize> {
        self.ks.binary_search(&k).ok()
    }
}
