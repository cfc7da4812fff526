use crate::diagnostics::OracleResult;
use crate::error::{invalid, Result};
use crate::point::{dist_sq, norm_sq};
use crate::problem::Problem;
use crate::schedules::{BatchSchedule, StepSchedule};

/// Constants appearing in the convergence bounds, evaluated at the oracle
/// point with the estimated variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub sigma_sq_hat: f64,
    /// `‖x0 − x*‖²`
    pub dist0_sq: f64,
    /// `M = ‖x0 − x*‖² + σ̂²`, the smallest admissible choice.
    pub m: f64,
    /// `M1 = ‖x0‖ + √(2(M + ‖x*‖² + σ̂²))`
    pub m1: f64,
    /// `M2 = ‖x0 − x*‖² + σ̂²`
    pub m2: f64,
    /// `M3 = 4(M + σ̂² + ‖x* − x0‖²)`
    pub m3: f64,
    /// Bound on `Σ 1/b_k`; `None` for constant batches.
    pub b_bound: Option<f64>,
}

pub fn theorem_constants(
    problem: &Problem,
    oracle: &OracleResult,
    sigma_sq: f64,
    batch: &BatchSchedule,
) -> Result<TheoremConstants> {
    oracle.x_star.check_dim(problem.dim())?;
    if !(sigma_sq.is_finite() && sigma_sq >= 0.0) {
        return Err(invalid("sigma_sq", "must be finite and nonnegative"));
    }
    let x0 = problem.x0();
    let xs = &oracle.x_star;
    let dist0_sq = dist_sq(x0, xs);
    let m = dist0_sq + sigma_sq;
    let m1 = x0.norm() + (2.0 * (m + norm_sq(xs) + sigma_sq)).sqrt();
    let m3 = 4.0 * (m + sigma_sq + dist0_sq);
    Ok(TheoremConstants {
        sigma_sq_hat: sigma_sq,
        dist0_sq,
        m,
        m1,
        m2: m,
        m3,
        b_bound: batch.b_bound(),
    })
}

/// `(‖x0 − x*‖² + M3 Σα_k² + σ̂² Σ 1/b_k) / (2 Σα_k)` with sums over
/// `k ∈ [0, K)`.
pub fn rate_bound(
    c: &TheoremConstants,
    step: &StepSchedule,
    batch: &BatchSchedule,
    horizon: u64,
) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let (mut s1, mut s2, mut sb) = (0.0, 0.0, 0.0);
    for k in 0..horizon {
        let a = step.at(k);
        s1 += a;
        s2 += a * a;
        sb += 1.0 / batch.at(k) as f64;
    }
    Ok((c.dist0_sq + c.m3 * s2 + c.sigma_sq_hat * sb) / (2.0 * s1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::Halfspace;
    use crate::point::Point;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn problem(x0: &[f64]) -> Problem {
        Problem::feasibility(
            vec![
                Halfspace::new(p(&[1.0, 0.0]), 0.0).unwrap(),
                Halfspace::new(p(&[0.0, 1.0]), 0.0).unwrap(),
            ],
            p(x0),
        )
        .unwrap()
    }

    #[test]
    fn solved_anchor() {
        let prob = problem(&[-3.0, -4.0]);
        let o = OracleResult::known(p(&[-3.0, -4.0]));
        let c = theorem_constants(&prob, &o, 0.0, &BatchSchedule::constant(1).unwrap()).unwrap();
        assert_eq!(c.m, 0.0);
        assert_eq!(c.m3, 0.0);
        // M1 = ‖x0‖ + √(2‖x*‖²) with x* = x0
        assert!((c.m1 - (5.0 + (50.0f64).sqrt())).abs() < 1e-12);
        assert!(c.b_bound.is_none());
    }

    #[test]
    fn substitution_example() {
        let prob = problem(&[1.0, 1.0]);
        let o = OracleResult::known(p(&[0.0, 0.0]));
        let batch = BatchSchedule::exponential(32.0, 2.0).unwrap();
        let c = theorem_constants(&prob, &o, 0.5, &batch).unwrap();
        assert_eq!(c.m, 2.5);
        assert_eq!(c.m2, 2.5);
        assert_eq!(c.m3, 4.0 * (2.5 + 0.5 + 2.0));
        assert_eq!(c.b_bound, Some(0.0625));
        assert!((c.m1 - (2.0f64.sqrt() + 6.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rhs_by_hand() {
        let prob = problem(&[1.0, 1.0]);
        let o = OracleResult::known(p(&[0.0, 0.0]));
        let batch = BatchSchedule::constant(2).unwrap();
        let c = theorem_constants(&prob, &o, 0.5, &batch).unwrap();
        let step = StepSchedule::poly(1.0).unwrap();
        // α = 1, 1/2; Σα = 1.5, Σα² = 1.25, Σ1/b = 1
        let expected = (2.0 + 20.0 * 1.25 + 0.5) / 3.0;
        assert!((rate_bound(&c, &step, &batch, 2).unwrap() - expected).abs() < 1e-12);
        assert!(rate_bound(&c, &step, &batch, 0).is_err());
    }
}
