use crate::error::{invalid, Error, Result};
use crate::record::EnsembleStats;

const MIN_POINTS: usize = 5;

/// `r_j = min_{i ≤ j} |g_i|`
pub fn running_min_abs(values: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|v| {
            best = best.min(v.abs());
            best
        })
        .collect()
}

/// Least-squares slope of `log y` against `log k` over the points with
/// `k ∈ [k_lo, k_hi]`.
pub fn fit_slope(ks: &[u64], ys: &[f64], window: (u64, u64)) -> Result<f64> {
    if ks.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: ks.len(),
            got: ys.len(),
        });
    }
    let (lo, hi) = window;
    if lo == 0 || lo > hi {
        return Err(invalid(
            "window",
            format!("[{lo}, {hi}] must satisfy 1 <= k_lo <= k_hi"),
        ));
    }
    let mut pts = Vec::new();
    for (&k, &y) in ks.iter().zip(ys) {
        if k < lo || k > hi {
            continue;
        }
        if y.is_nan() || y <= 0.0 {
            return Err(Error::GapBelowNoiseFloor(format!("value {y:e} at k = {k}")));
        }
        pts.push(((k as f64).ln(), y.ln()));
    }
    if pts.len() < MIN_POINTS {
        return Err(invalid(
            "window",
            format!(
                "[{lo}, {hi}] holds {} recorded points, need {MIN_POINTS}",
                pts.len()
            ),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Slope of the running minimum of the mean `f0` gap magnitude on a log-log
/// scale. The running minimum is taken from the first recorded iteration.
pub fn fit_rate(stats: &EnsembleStats, window: (u64, u64)) -> Result<f64> {
    let gaps: Vec<f64> = stats.f0_gap.iter().map(|e| e.mean).collect();
    if gaps.iter().any(|g| g.is_nan()) {
        return Err(invalid(
            "stats",
            "f0 gap is unavailable without an oracle point",
        ));
    }
    fit_slope(&stats.ks, &running_min_abs(&gaps), window)
}

/// Predicted decay of the `f0` gap for steps `α_k ∝ (k+1)^(−a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedRate {
    /// Exponent `p` in `O(K^p)`, ignoring logarithmic factors.
    pub exponent: f64,
    /// Power of the `log K` factor: 1 multiplies, −1 divides, 0 for none.
    pub log_power: i32,
}

impl std::fmt::Display for PredictedRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.log_power, self.exponent) {
            (1, p) => write!(f, "O(log K * K^{p})"),
            (-1, 0.0) => write!(f, "O(1 / log K)"),
            (-1, p) => write!(f, "O(K^{p} / log K)"),
            (_, p) => write!(f, "O(K^{p})"),
        }
    }
}

/// `−a` for `a < 1/2`, `−1/2` with a log factor at `a = 1/2`, `a − 1` for
/// `a ∈ (1/2, 1)`, and `1/log K` at `a = 1`.
pub fn predicted_exponent(a: f64) -> Result<PredictedRate> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(invalid("a", format!("{a} is outside (0, 1]")));
    }
    Ok(if a < 0.5 {
        PredictedRate {
            exponent: -a,
            log_power: 0,
        }
    } else if a == 0.5 {
        PredictedRate {
            exponent: -0.5,
            log_power: 1,
        }
    } else if a < 1.0 {
        PredictedRate {
            exponent: a - 1.0,
            log_power: 0,
        }
    } else {
        PredictedRate {
            exponent: 0.0,
            log_power: -1,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks() -> Vec<u64> {
        (1..=200).map(|i| i * 10).collect()
    }

    #[test]
    fn exact_power_law() {
        let ks = ks();
        let ys: Vec<f64> = ks.iter().map(|&k| (k as f64).powf(-0.5)).collect();
        assert!((fit_slope(&ks, &ys, (10, 2000)).unwrap() + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn constant_is_flat() {
        let ks = ks();
        let ys = vec![0.3; ks.len()];
        assert!(fit_slope(&ks, &ys, (10, 2000)).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn nonpositive_and_sparse_windows() {
        let ks = ks();
        let mut ys = vec![1.0; ks.len()];
        ys[3] = 0.0;
        assert!(matches!(
            fit_slope(&ks, &ys, (10, 2000)),
            Err(Error::GapBelowNoiseFloor(_))
        ));
        assert!(fit_slope(&ks, &vec![1.0; ks.len()], (10, 30)).is_err());
        assert!(fit_slope(&ks, &ys, (0, 30)).is_err());
    }

    #[test]
    fn running_min_of_magnitudes() {
        assert_eq!(
            running_min_abs(&[-3.0, 2.0, -2.5, 1.0]),
            vec![3.0, 2.0, 2.0, 1.0]
        );
    }

    #[test]
    fn predicted_cases() {
        assert_eq!(predicted_exponent(0.25).unwrap().exponent, -0.25);
        assert_eq!(predicted_exponent(0.5).unwrap().log_power, 1);
        assert_eq!(predicted_exponent(1.0).unwrap().to_string(), "O(1 / log K)");
        assert_eq!(predicted_exponent(0.75).unwrap().exponent, -0.25);
        assert!(predicted_exponent(0.0).is_err());
    }
}
