//! Step-size and batch-size schedules, and finite-horizon checks of the
//! conditions the convergence results place on them.

use std::fmt;

use crate::error::{invalid, Result};

/// Batch sizes are clamped here so every size is an exactly representable
/// integer in f64.
pub const MAX_BATCH: u64 = 1 << 53;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepKind {
    /// `α_k = (k+1)^(−a)`, `a ∈ (0, 1]`.
    Poly { a: f64 },
    /// `α_k = (2λ−1) / (2(1−λ)(k+1)^a)`, `a ∈ (0, 1]`, `λ ∈ (1/2, 3/4]`.
    LambdaPoly { a: f64, lambda: f64 },
    /// `α_k = c`, `c ∈ (0, 1]`.
    Constant { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    kind: StepKind,
}

impl StepSchedule {
    pub fn poly(a: f64) -> Result<Self> {
        check_exponent(a)?;
        Ok(StepSchedule {
            kind: StepKind::Poly { a },
        })
    }

    pub fn lambda_poly(a: f64, lambda: f64) -> Result<Self> {
        check_exponent(a)?;
        check_lambda(lambda)?;
        Ok(StepSchedule {
            kind: StepKind::LambdaPoly { a, lambda },
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid("step.c", format!("{c} is outside (0, 1]")));
        }
        Ok(StepSchedule {
            kind: StepKind::Constant { c },
        })
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    /// Multiplier in front of `(k+1)^(−a)`; equals `α_0`.
    pub fn scale(&self) -> f64 {
        match self.kind {
            StepKind::Poly { .. } => 1.0,
            StepKind::LambdaPoly { lambda, .. } => lambda_step_bound(lambda),
            StepKind::Constant { c } => c,
        }
    }

    /// Decay exponent `a` (zero for constant steps).
    pub fn exponent(&self) -> f64 {
        match self.kind {
            StepKind::Poly { a } | StepKind::LambdaPoly { a, .. } => a,
            StepKind::Constant { .. } => 0.0,
        }
    }

    pub fn at(&self, k: u64) -> f64 {
        match self.kind {
            StepKind::Poly { a } => ((k + 1) as f64).powf(-a),
            StepKind::LambdaPoly { a, lambda } => {
                (2.0 * lambda - 1.0) / (2.0 * (1.0 - lambda) * ((k + 1) as f64).powf(a))
            }
            StepKind::Constant { c } => c,
        }
    }

    pub fn vanishes(&self) -> bool {
        !matches!(self.kind, StepKind::Constant { .. })
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StepKind::Poly { a } => write!(f, "poly(a={a})"),
            StepKind::LambdaPoly { a, lambda } => write!(f, "lambda_poly(a={a}, lambda={lambda})"),
            StepKind::Constant { c } => write!(f, "constant(c={c})"),
        }
    }
}

fn check_exponent(a: f64) -> Result<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(invalid("step.a", format!("{a} is outside (0, 1]")))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.5 && lambda <= 0.75 {
        Ok(())
    } else {
        Err(invalid("lambda", format!("{lambda} is outside (1/2, 3/4]")))
    }
}

/// `(2λ−1) / (2(1−λ))`, the largest step the λ-averaged rate bound allows.
pub fn lambda_step_bound(lambda: f64) -> f64 {
    (2.0 * lambda - 1.0) / (2.0 * (1.0 - lambda))
}

pub fn step_at(s: &StepSchedule, k: u64) -> f64 {
    s.at(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchKind {
    Constant {
        b: u64,
    },
    /// `b_k = floor((a0·k + b0)^c)`
    Polynomial {
        a0: f64,
        b0: f64,
        c: f64,
    },
    /// `b_k = floor(b0·δ^k)`
    Exponential {
        b0: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSchedule {
    kind: BatchKind,
    cap: Option<u64>,
}

impl BatchSchedule {
    pub fn constant(b: u64) -> Result<Self> {
        if b == 0 {
            return Err(invalid("batch.b", "must be at least 1"));
        }
        Ok(BatchSchedule {
            kind: BatchKind::Constant { b },
            cap: None,
        })
    }

    pub fn polynomial(a0: f64, b0: f64, c: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(invalid("batch.a0", format!("{a0} must be positive")));
        }
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(invalid("batch.b0", format!("{b0} must be positive")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("batch.c", format!("{c} must be positive")));
        }
        Ok(BatchSchedule {
            kind: BatchKind::Polynomial { a0, b0, c },
            cap: None,
        })
    }

    pub fn exponential(b0: f64, delta: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(invalid("batch.b0", format!("{b0} must be positive")));
        }
        if !(delta > 1.0 && delta.is_finite()) {
            return Err(invalid("batch.delta", format!("{delta} must exceed 1")));
        }
        Ok(BatchSchedule {
            kind: BatchKind::Exponential { b0, delta },
            cap: None,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Result<Self> {
        if cap == 0 {
            return Err(invalid("batch.cap", "must be at least 1"));
        }
        self.cap = Some(cap);
        Ok(self)
    }

    pub fn kind(&self) -> BatchKind {
        self.kind
    }

    pub fn cap(&self) -> Option<u64> {
        self.cap
    }

    pub fn is_increasing(&self) -> bool {
        !matches!(self.kind, BatchKind::Constant { .. })
    }

    /// The schedule formula before flooring and capping.
    pub fn raw_at(&self, k: u64) -> f64 {
        match self.kind {
            BatchKind::Constant { b } => b as f64,
            BatchKind::Polynomial { a0, b0, c } => (a0 * k as f64 + b0).powf(c),
            BatchKind::Exponential { b0, delta } => b0 * delta.powf(k as f64),
        }
    }

    /// Uncapped size: `max(1, floor(formula))`, clamped to [`MAX_BATCH`].
    fn uncapped_at(&self, k: u64) -> u64 {
        match self.kind {
            BatchKind::Constant { b } => b.min(MAX_BATCH),
            _ => {
                let raw = self.raw_at(k).floor();
                if raw >= MAX_BATCH as f64 {
                    MAX_BATCH
                } else {
                    (raw as u64).max(1)
                }
            }
        }
    }

    pub fn at(&self, k: u64) -> u64 {
        let b = self.uncapped_at(k);
        match self.cap {
            Some(cap) => b.min(cap),
            None => b,
        }
    }

    pub fn is_capped_at(&self, k: u64) -> bool {
        self.cap.is_some_and(|cap| self.uncapped_at(k) > cap)
    }

    /// The constant `B` bounding `Σ_k 1/b_k` for the increasing kinds:
    /// `(2c−1)/((c−1)·min{a0, b0})` (polynomial, `c > 1`) or
    /// `δ/((δ−1)·b0)` (exponential).
    pub fn b_bound(&self) -> Option<f64> {
        match self.kind {
            BatchKind::Constant { .. } => None,
            BatchKind::Polynomial { a0, b0, c } => {
                (c > 1.0).then(|| (2.0 * c - 1.0) / ((c - 1.0) * a0.min(b0)))
            }
            BatchKind::Exponential { b0, delta } => Some(delta / ((delta - 1.0) * b0)),
        }
    }

    /// An upper bound on `Σ_k 1/√b_k` for the unfloored, uncapped formula:
    /// the geometric sum `1/(√b0 (1 − δ^(−1/2)))`, or the integral-test bound
    /// `b0^(−c/2) + b0^(1−c/2) / (a0 (c/2 − 1))` for polynomial growth with
    /// `c > 2`.
    pub fn inv_sqrt_bound(&self) -> Option<f64> {
        match self.kind {
            BatchKind::Constant { .. } => None,
            BatchKind::Polynomial { a0, b0, c } => (c > 2.0).then(|| {
                let h = 0.5 * c;
                b0.powf(-h) + b0.powf(1.0 - h) / (a0 * (h - 1.0))
            }),
            BatchKind::Exponential { b0, delta } => {
                Some(1.0 / (b0.sqrt() * (1.0 - delta.powf(-0.5))))
            }
        }
    }

    /// Whether `Σ 1/√b_k < ∞` holds for the schedule formula.
    pub fn inv_sqrt_summable(&self) -> bool {
        match self.kind {
            BatchKind::Constant { .. } => false,
            BatchKind::Polynomial { c, .. } => c > 2.0,
            BatchKind::Exponential { .. } => true,
        }
    }

    /// Whether `Σ 1/b_k < ∞` holds for the schedule formula.
    pub fn inv_summable(&self) -> bool {
        match self.kind {
            BatchKind::Constant { .. } => false,
            BatchKind::Polynomial { c, .. } => c > 1.0,
            BatchKind::Exponential { .. } => true,
        }
    }
}

impl fmt::Display for BatchSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BatchKind::Constant { b } => write!(f, "constant(b={b})")?,
            BatchKind::Polynomial { a0, b0, c } => {
                write!(f, "polynomial(a0={a0}, b0={b0}, c={c})")?
            }
            BatchKind::Exponential { b0, delta } => {
                write!(f, "exponential(b0={b0}, delta={delta})")?
            }
        }
        if let Some(cap) = self.cap {
            write!(f, " cap {cap}")?;
        }
        Ok(())
    }
}

pub fn batch_at(b: &BatchSchedule, k: u64) -> u64 {
    b.at(k)
}

/// Outcome of checking one pointwise condition over `k ∈ [0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionCheck {
    pub violations: u64,
    pub first_violation: Option<u64>,
    /// Smallest `k0` such that the condition holds for every `k ∈ [k0, K)`;
    /// `None` when it fails at `K − 1` ("never within horizon").
    pub holds_from: Option<u64>,
}

impl ConditionCheck {
    fn scan(horizon: u64, mut holds: impl FnMut(u64) -> bool) -> Self {
        let mut violations = 0;
        let mut first_violation = None;
        let mut last_violation = None;
        for k in 0..horizon {
            if !holds(k) {
                violations += 1;
                first_violation.get_or_insert(k);
                last_violation = Some(k);
            }
        }
        let holds_from = match last_violation {
            None => Some(0),
            Some(k) if k + 1 < horizon => Some(k + 1),
            Some(_) => None,
        };
        ConditionCheck {
            violations,
            first_violation,
            holds_from,
        }
    }

    pub fn holds_everywhere(&self) -> bool {
        self.violations == 0
    }

    pub fn holds_eventually(&self) -> bool {
        self.holds_from.is_some()
    }
}

impl fmt::Display for ConditionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.holds_from {
            Some(0) => write!(f, "holds for all k (k0 = 0)"),
            Some(k0) => write!(
                f,
                "holds from k0 = {k0} ({} earlier violations, first at k = {})",
                self.violations,
                self.first_violation.unwrap_or(0)
            ),
            None => write!(
                f,
                "never within horizon ({} violations, first at k = {})",
                self.violations,
                self.first_violation.unwrap_or(0)
            ),
        }
    }
}

/// Infinite-horizon properties certified analytically from the schedule
/// kinds rather than from a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Certification {
    pub step_vanishes: bool,
    pub step_sum_diverges: bool,
    pub step_variation_finite: bool,
    pub inv_sqrt_batch_summable: bool,
    pub inv_batch_summable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub horizon: u64,
    pub lambda: Option<f64>,
    pub one_over_b_le_alpha: ConditionCheck,
    pub one_over_b_le_alpha_sq: ConditionCheck,
    pub alpha_le_lambda_bound: Option<ConditionCheck>,
    /// `Σ_{k<K} α_k`
    pub step_sum: f64,
    /// `Σ_{k<K} α_k²`
    pub step_sq_sum: f64,
    /// `Σ_{k<K} |α_{k+1} − α_k|`
    pub step_variation: f64,
    /// Closed-form lower bound on `Σ_{k<K} α_k` for decaying steps.
    pub step_sum_lower_bound: Option<f64>,
    /// Closed-form upper bound on `Σ_{k<K} α_k²` for decaying steps.
    pub step_sq_sum_upper_bound: Option<f64>,
    /// `Σ_{k<K} 1/√b_k`
    pub partial_sum_inv_sqrt_b: f64,
    /// `Σ_{k<K} 1/b_k`
    pub partial_sum_inv_b: f64,
    /// `Σ_{k<K} 1/√β_k` over the unfloored, uncapped formula values `β_k`.
    pub formula_sum_inv_sqrt_b: f64,
    /// `Σ_{k<K} 1/β_k`
    pub formula_sum_inv_b: f64,
    pub b_bound: Option<f64>,
    pub inv_sqrt_b_bound: Option<f64>,
    pub certification: Certification,
    pub cap_first_hit: Option<u64>,
}

impl ValidationReport {
    /// `Σ 1/β_k ≤ B` over the horizon for the schedule formula, which is
    /// what `B` bounds.
    pub fn formula_inv_b_within_b_bound(&self) -> Option<bool> {
        self.b_bound.map(|b| self.formula_sum_inv_b <= b)
    }

    /// `Σ 1/b_k ≤ B` over the horizon, for increasing kinds. Flooring and
    /// capping can push the realized sum above `B`.
    pub fn inv_b_within_b_bound(&self) -> Option<bool> {
        self.b_bound.map(|b| self.partial_sum_inv_b <= b)
    }

    /// `Σ 1/√b_k ≤ B` over the horizon, for increasing kinds.
    pub fn inv_sqrt_b_within_b_bound(&self) -> Option<bool> {
        self.b_bound.map(|b| self.partial_sum_inv_sqrt_b <= b)
    }

    pub fn inv_sqrt_b_within_sqrt_bound(&self) -> Option<bool> {
        self.inv_sqrt_b_bound
            .map(|b| self.partial_sum_inv_sqrt_b <= b)
    }

    /// Mean-square convergence conditions for the stochastic Halpern method:
    /// vanishing, non-summable steps of bounded variation, `1/b_k ≤ α_k²`
    /// from some `k0`, and summable `1/√b_k`.
    pub fn halpern_conditions_hold(&self) -> bool {
        let c = &self.certification;
        c.step_vanishes
            && c.step_sum_diverges
            && c.step_variation_finite
            && self.one_over_b_le_alpha_sq.holds_eventually()
            && c.inv_sqrt_batch_summable
    }

    /// Rate-bound conditions for the λ-averaged method: `1/b_k ≤ α_k` from
    /// some `k0`, `α_k ≤ (2λ−1)/(2(1−λ))` everywhere, non-summable steps and
    /// summable `1/b_k`.
    pub fn lambda_conditions_hold(&self) -> bool {
        let c = &self.certification;
        self.one_over_b_le_alpha.holds_eventually()
            && self
                .alpha_le_lambda_bound
                .is_some_and(|v| v.holds_everywhere())
            && c.step_sum_diverges
            && c.inv_batch_summable
    }

    /// Almost-sure convergence conditions for the stochastic KM method.
    pub fn km_conditions_hold(&self) -> bool {
        self.certification.step_sum_diverges && self.certification.inv_sqrt_batch_summable
    }

    /// Step conditions for the deterministic Halpern method.
    pub fn deterministic_halpern_conditions_hold(&self) -> bool {
        let c = &self.certification;
        c.step_vanishes && c.step_sum_diverges && c.step_variation_finite
    }
}

/// Checks the schedule conditions over `k ∈ [0, K)`. Infeasibility is
/// reported in the returned value, never as an error.
pub fn validate(
    step: &StepSchedule,
    batch: &BatchSchedule,
    horizon: u64,
    lambda: Option<f64>,
) -> ValidationReport {
    let horizon = horizon.max(1);
    let alpha = |k| step.at(k);
    let inv_b = |k| 1.0 / batch.at(k) as f64;

    let one_over_b_le_alpha = ConditionCheck::scan(horizon, |k| inv_b(k) <= alpha(k));
    let one_over_b_le_alpha_sq = ConditionCheck::scan(horizon, |k| {
        let a = alpha(k);
        inv_b(k) <= a * a
    });
    let alpha_le_lambda_bound = lambda.map(|l| {
        let bound = lambda_step_bound(l);
        ConditionCheck::scan(horizon, |k| alpha(k) <= bound)
    });

    let mut step_sum = 0.0;
    let mut step_sq_sum = 0.0;
    let mut step_variation = 0.0;
    let mut partial_sum_inv_sqrt_b = 0.0;
    let mut partial_sum_inv_b = 0.0;
    let mut formula_sum_inv_sqrt_b = 0.0;
    let mut formula_sum_inv_b = 0.0;
    let mut cap_first_hit = None;
    for k in 0..horizon {
        let a = alpha(k);
        step_sum += a;
        step_sq_sum += a * a;
        step_variation += (alpha(k + 1) - a).abs();
        let b = batch.at(k) as f64;
        partial_sum_inv_sqrt_b += 1.0 / b.sqrt();
        partial_sum_inv_b += 1.0 / b;
        let raw = batch.raw_at(k);
        formula_sum_inv_sqrt_b += 1.0 / raw.sqrt();
        formula_sum_inv_b += 1.0 / raw;
        if cap_first_hit.is_none() && batch.is_capped_at(k) {
            cap_first_hit = Some(k);
        }
    }
    if let Some(k) = cap_first_hit {
        log::warn!("batch schedule {batch} reaches its cap at k = {k}");
    }

    ValidationReport {
        horizon,
        lambda,
        one_over_b_le_alpha,
        one_over_b_le_alpha_sq,
        alpha_le_lambda_bound,
        step_sum,
        step_sq_sum,
        step_variation,
        step_sum_lower_bound: step_sum_lower_bound(step, horizon),
        step_sq_sum_upper_bound: step_sq_sum_upper_bound(step, horizon),
        partial_sum_inv_sqrt_b,
        partial_sum_inv_b,
        formula_sum_inv_sqrt_b,
        formula_sum_inv_b,
        b_bound: batch.b_bound(),
        inv_sqrt_b_bound: batch.inv_sqrt_bound(),
        certification: Certification {
            step_vanishes: step.vanishes(),
            step_sum_diverges: true,
            step_variation_finite: true,
            inv_sqrt_batch_summable: batch.inv_sqrt_summable(),
            inv_batch_summable: batch.inv_summable(),
        },
        cap_first_hit,
    }
}

/// `scale · ((K+1)^(1−a) − 1)/(1−a)` for `a < 1`, `scale · log(K+1)` for
/// `a = 1`.
pub fn step_sum_lower_bound(step: &StepSchedule, horizon: u64) -> Option<f64> {
    if !step.vanishes() {
        return None;
    }
    let a = step.exponent();
    let k1 = (horizon + 1) as f64;
    let core = if a < 1.0 {
        (k1.powf(1.0 - a) - 1.0) / (1.0 - a)
    } else {
        k1.ln()
    };
    Some(step.scale() * core)
}

/// `scale² · {K^(1−2a)/(1−2a), 1 + log K, 2a/(2a−1)}` for `a` below, at or
/// above one half.
pub fn step_sq_sum_upper_bound(step: &StepSchedule, horizon: u64) -> Option<f64> {
    if !step.vanishes() {
        return None;
    }
    let a = step.exponent();
    let k = horizon as f64;
    let core = if a < 0.5 {
        k.powf(1.0 - 2.0 * a) / (1.0 - 2.0 * a)
    } else if a == 0.5 {
        1.0 + k.ln()
    } else {
        2.0 * a / (2.0 * a - 1.0)
    };
    Some(step.scale().powi(2) * core)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        let s = StepSchedule::poly(0.5).unwrap();
        assert_eq!(s.at(0), 1.0);
        assert_eq!(s.at(3), 0.5);
        let l = StepSchedule::lambda_poly(0.5, 0.75).unwrap();
        assert_eq!(l.at(0), 1.0);
        assert_eq!(StepSchedule::constant(0.3).unwrap().at(99), 0.3);
    }

    #[test]
    fn step_parameter_ranges() {
        assert!(StepSchedule::poly(0.0).is_err());
        assert!(StepSchedule::poly(1.2).is_err());
        assert!(StepSchedule::poly(1.0).is_ok());
        assert!(StepSchedule::lambda_poly(0.5, 0.5).is_err());
        assert!(StepSchedule::lambda_poly(0.5, 0.9).is_err());
        assert!(StepSchedule::lambda_poly(0.5, 0.75).is_ok());
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(1.5).is_err());
    }

    #[test]
    fn batch_examples() {
        let e = BatchSchedule::exponential(32.0, 2.0).unwrap();
        assert_eq!(e.at(0), 32);
        assert_eq!(e.at(4), 512);
        assert_eq!(BatchSchedule::constant(8).unwrap().at(12345), 8);
        assert_eq!(BatchSchedule::polynomial(1.0, 1.0, 2.0).unwrap().at(3), 16);
    }

    #[test]
    fn batch_floor_floor_and_cap() {
        let p = BatchSchedule::polynomial(0.1, 0.5, 1.0).unwrap();
        assert_eq!(p.at(0), 1); // floor(0.5) = 0, raised to 1
        assert_eq!(p.at(30), 3);
        let e = BatchSchedule::exponential(4.0, 1.01)
            .unwrap()
            .with_cap(1 << 16)
            .unwrap();
        assert_eq!(e.at(5000), 1 << 16);
        assert!(e.is_capped_at(5000));
        assert!(!e.is_capped_at(0));
        let huge = BatchSchedule::exponential(1.0, 2.0).unwrap();
        assert_eq!(huge.at(200), MAX_BATCH);
    }

    #[test]
    fn batch_parameter_ranges() {
        assert!(BatchSchedule::constant(0).is_err());
        assert!(BatchSchedule::exponential(4.0, 1.0).is_err());
        assert!(BatchSchedule::polynomial(0.0, 1.0, 2.0).is_err());
        assert!(BatchSchedule::polynomial(1.0, 1.0, 0.0).is_err());
        assert!(BatchSchedule::constant(3).unwrap().with_cap(0).is_err());
    }

    #[test]
    fn validate_poly_with_constant_batch() {
        let s = StepSchedule::poly(0.5).unwrap();
        let b = BatchSchedule::constant(4).unwrap();
        let r = validate(&s, &b, 100, None);
        assert_eq!(r.one_over_b_le_alpha.first_violation, Some(16));
        assert_eq!(r.one_over_b_le_alpha.holds_from, None);
        assert_eq!(r.one_over_b_le_alpha.violations, 84);
        assert!(!r.halpern_conditions_hold());
        assert_eq!(r.b_bound, None);
    }

    #[test]
    fn validate_poly_with_fast_exponential_batch() {
        let s = StepSchedule::poly(0.5).unwrap();
        let b = BatchSchedule::exponential(1.0, 4.0).unwrap();
        let r = validate(&s, &b, 50, None);
        assert_eq!(r.one_over_b_le_alpha_sq.holds_from, Some(0));
        assert!(r.one_over_b_le_alpha_sq.holds_everywhere());
        assert!(r.halpern_conditions_hold());
    }

    #[test]
    fn exponential_b_bound() {
        let b = BatchSchedule::exponential(32.0, 2.0).unwrap();
        assert_eq!(b.b_bound(), Some(0.0625));
        for k in [1u64, 5, 10, 40] {
            let r = validate(&StepSchedule::poly(0.5).unwrap(), &b, k, None);
            assert_eq!(r.inv_b_within_b_bound(), Some(true));
            assert_eq!(r.formula_inv_b_within_b_bound(), Some(true));
            assert_eq!(r.inv_sqrt_b_within_sqrt_bound(), Some(true));
            // the k = 0 term alone is 1/sqrt(32) > 1/16
            assert_eq!(r.inv_sqrt_b_within_b_bound(), Some(false));
        }
    }

    #[test]
    fn lambda_condition_scan() {
        let s = StepSchedule::poly(1.0).unwrap();
        let b = BatchSchedule::exponential(4.0, 1.5).unwrap();
        // the bound at lambda = 0.6 rounds to just below 1/4, so k = 3 fails
        let r = validate(&s, &b, 100, Some(0.6));
        let c = r.alpha_le_lambda_bound.unwrap();
        assert_eq!(c.holds_from, Some(4));
        assert_eq!(c.violations, 4);
        assert!(!r.lambda_conditions_hold());
        let l = StepSchedule::lambda_poly(0.5, 0.6).unwrap();
        let r = validate(&l, &b, 100, Some(0.6));
        assert!(r.alpha_le_lambda_bound.unwrap().holds_everywhere());
    }

    #[test]
    fn monotone_schedules() {
        for s in [
            StepSchedule::poly(0.3).unwrap(),
            StepSchedule::poly(1.0).unwrap(),
            StepSchedule::lambda_poly(0.5, 0.7).unwrap(),
        ] {
            for k in 0..2000 {
                assert!(s.at(k + 1) < s.at(k));
            }
        }
        for b in [
            BatchSchedule::polynomial(0.5, 2.0, 2.5).unwrap(),
            BatchSchedule::exponential(1.0, 1.01).unwrap(),
        ] {
            for k in 0..2000 {
                assert!(b.at(k + 1) >= b.at(k));
            }
        }
    }

    #[test]
    fn step_sum_lower_bounds_hold() {
        for a in [0.25, 0.5, 0.75, 1.0] {
            let s = StepSchedule::poly(a).unwrap();
            for horizon in [10, 100, 1000] {
                let r = validate(&s, &BatchSchedule::constant(1).unwrap(), horizon, None);
                assert!(r.step_sum >= r.step_sum_lower_bound.unwrap());
                assert!(r.step_variation <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn step_sq_sum_upper_bounds_hold_in_each_case() {
        for a in [0.25, 0.5, 0.75] {
            let s = StepSchedule::lambda_poly(a, 0.7).unwrap();
            for horizon in [10, 100, 1000] {
                let r = validate(&s, &BatchSchedule::constant(1).unwrap(), horizon, Some(0.7));
                assert!(r.step_sq_sum <= r.step_sq_sum_upper_bound.unwrap());
            }
        }
    }

    #[test]
    fn constant_batch_partial_sum_keeps_growing() {
        let s = StepSchedule::poly(0.5).unwrap();
        let b = BatchSchedule::constant(16).unwrap();
        for k in [10u64, 100, 1000] {
            let one = validate(&s, &b, k, None).partial_sum_inv_sqrt_b;
            let two = validate(&s, &b, 2 * k, None).partial_sum_inv_sqrt_b;
            assert!(two >= 1.9 * one);
        }
    }

    #[test]
    fn condition_display() {
        let c = ConditionCheck::scan(10, |k| k < 3);
        assert_eq!(c.holds_from, None);
        assert!(c.to_string().starts_with("never within horizon"));
        let c = ConditionCheck::scan(10, |k| k >= 3);
        assert_eq!(c.holds_from, Some(3));
    }
}
