//! Iteration rules: deterministic KM and Halpern, their mini-batch
//! stochastic versions, and the λ-averaged stochastic Halpern method.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::family::FiniteFamily;
use crate::point::{check_dim, dist, dist_sq, Point};
use crate::problem::Problem;
use crate::record::{IterationRecord, RunRecord};
use crate::sampling::{apply_counts_into, sample_counts, SeedStream};
use crate::schedules::{check_lambda, lambda_step_bound, BatchSchedule, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// `x_{k+1} = (1−α_k) x_k + α_k T(x_k)`
    Km,
    /// `x_{k+1} = α_k x0 + (1−α_k) T(x_k)`
    Halpern,
    /// KM with `T` replaced by the mini-batch mapping `T_{ξ_k}`.
    StochKm,
    /// Halpern with `T` replaced by the mini-batch mapping `T_{ξ_k}`.
    StochHalpern,
    /// Stochastic Halpern applied to `λ Id + (1−λ) T_{ξ_k}`.
    StochHalpernLambda(f64),
}

impl Method {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Method::Km | Method::Halpern)
    }

    pub fn is_halpern(&self) -> bool {
        !matches!(self, Method::Km | Method::StochKm)
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            Method::StochHalpernLambda(l) => Some(l),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Km => "km",
            Method::Halpern => "halpern",
            Method::StochKm => "stoch_km",
            Method::StochHalpern => "stoch_halpern",
            Method::StochHalpernLambda(_) => "stoch_halpern_lambda",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::StochHalpernLambda(l) => write!(f, "stoch_halpern_lambda(lambda={l})"),
            m => f.write_str(m.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub step: StepSchedule,
    /// Ignored by the deterministic methods.
    pub batch: BatchSchedule,
    pub iterations: u64,
    pub seed: u64,
    /// Record every `record_every`-th iterate, plus the final one.
    pub record_every: u64,
}

impl SolverConfig {
    /// Checks method and schedule compatibility over the whole horizon.
    pub fn check(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if let Method::StochHalpernLambda(l) = self.method {
            check_lambda(l)?;
        }
        self.check_steps()
    }

    fn check_steps(&self) -> Result<()> {
        let bound = self.method.lambda().map(lambda_step_bound);
        for k in 0..self.iterations {
            let a = self.step.at(k);
            if self.method.is_halpern() {
                if !(a > 0.0 && a <= 1.0) {
                    return Err(invalid(
                        "step",
                        format!("alpha_{k} = {a} is outside (0, 1]"),
                    ));
                }
            } else if !(a > 0.0 && a < 1.0) {
                return Err(invalid(
                    "step",
                    format!("alpha_{k} = {a} is outside (0, 1), required by KM updates"),
                ));
            }
            if let Some(bound) = bound {
                if a > bound {
                    return Err(invalid(
                        "step",
                        format!(
                            "alpha_{k} = {a} exceeds (2 lambda - 1)/(2 (1 - lambda)) = {bound}"
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    fn records(&self, k: u64) -> bool {
        k.is_multiple_of(self.record_every) || k == self.iterations
    }
}

/// `α x0 + (1−α) t`
pub fn halpern_step(x0: &Point, t_val: &Point, alpha: f64) -> Result<Point> {
    check_dim(x0.dim(), t_val.dim())?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 1]")));
    }
    let mut out = vec![0.0; x0.dim()];
    halpern_into(x0, t_val, alpha, &mut out);
    Point::new(out)
}

/// `(1−α) x + α t`
pub fn km_step(x: &Point, t_val: &Point, alpha: f64) -> Result<Point> {
    check_dim(x.dim(), t_val.dim())?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 1)")));
    }
    let mut out = vec![0.0; x.dim()];
    km_into(x, t_val, alpha, &mut out);
    Point::new(out)
}

#[inline]
fn halpern_into(x0: &[f64], t: &[f64], alpha: f64, out: &mut [f64]) {
    let beta = 1.0 - alpha;
    for ((o, a), b) in out.iter_mut().zip(x0).zip(t) {
        *o = alpha * a + beta * b;
    }
}

#[inline]
fn km_into(x: &[f64], t: &[f64], alpha: f64, out: &mut [f64]) {
    let beta = 1.0 - alpha;
    for ((o, a), b) in out.iter_mut().zip(x).zip(t) {
        *o = beta * a + alpha * b;
    }
}

/// Runs `cfg.iterations` iterations. When the problem carries oracle data,
/// `x*` is computed first and distances to it are recorded.
pub fn run(problem: &Problem, cfg: &SolverConfig) -> Result<RunRecord> {
    cfg.check()?;
    let oracle = problem.solve_oracle()?;
    run_unchecked(problem, cfg, oracle.as_ref().map(|o| &o.x_star))
}

/// Like [`run`], with `x*` supplied by the caller (e.g. computed once for a
/// whole ensemble).
pub fn run_with_reference(
    problem: &Problem,
    cfg: &SolverConfig,
    x_star: Option<&Point>,
) -> Result<RunRecord> {
    cfg.check()?;
    if let Some(p) = x_star {
        p.check_dim(problem.dim())?;
    }
    run_unchecked(problem, cfg, x_star)
}

fn run_unchecked(
    problem: &Problem,
    cfg: &SolverConfig,
    x_star: Option<&Point>,
) -> Result<RunRecord> {
    let family = problem.family();
    let n = family.len();
    let d = family.dim();
    let x0: &[f64] = problem.x0();
    let x_star: Option<&[f64]> = x_star.map(|p| &p[..]);
    let stream = SeedStream::new(cfg.seed);

    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut t = vec![0.0; d];
    let mut tx = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let capacity = (cfg.iterations / cfg.record_every + 2) as usize;
    let mut iterations = Vec::with_capacity(capacity);

    for k in 0..=cfg.iterations {
        let alpha = cfg.step.at(k);
        let batch_size = if cfg.method.is_stochastic() {
            cfg.batch.at(k)
        } else {
            0
        };
        let recorded = cfg.records(k);
        if recorded {
            family.exact_mean_into(&x, &mut tx, &mut scratch);
            iterations.push(IterationRecord {
                k,
                alpha,
                batch_size,
                residual: dist(&x, &tx),
                f0_value: 0.5 * dist_sq(&x, x0),
                dist_sq: x_star.map(|s| dist_sq(&x, s)),
                next_step_len: None,
                sample_dist_sq: None,
            });
        }
        if k == cfg.iterations {
            break;
        }

        if cfg.method.is_stochastic() {
            let counts = sample_counts(&stream, k, n, batch_size);
            apply_counts_into(family, &counts, &x, &mut t, &mut scratch);
        } else if recorded {
            t.copy_from_slice(&tx);
        } else {
            family.exact_mean_into(&x, &mut t, &mut scratch);
        }
        if let Method::StochHalpernLambda(lambda) = cfg.method {
            let mu = 1.0 - lambda;
            for (ti, xi) in t.iter_mut().zip(&x) {
                *ti = lambda * xi + mu * *ti;
            }
        }

        if cfg.method.is_halpern() {
            halpern_into(x0, &t, alpha, &mut next);
        } else {
            km_into(&x, &t, alpha, &mut next);
        }
        if !crate::family::ensure_finite(&next) {
            return Err(Error::Diverged {
                iteration: k + 1,
                seed: cfg.seed,
            });
        }
        if recorded {
            let last = iterations.last_mut().expect("just pushed");
            last.next_step_len = Some(dist(&next, &x));
            last.sample_dist_sq = x_star.map(|s| dist_sq(&t, s));
        }
        std::mem::swap(&mut x, &mut next);
    }

    let best_f0_index = iterations
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f0_value.total_cmp(&b.1.f0_value))
        .map_or(0, |(i, _)| i);
    Ok(RunRecord {
        iterations,
        final_point: Point::from_vec_unchecked(x),
        seed: cfg.seed,
        best_f0_index,
    })
}
