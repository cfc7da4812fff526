use rayon::prelude::*;

use crate::diagnostics::OracleResult;
use crate::error::{invalid, Result};
use crate::problem::Problem;
use crate::record::{EnsembleStats, Estimate, RunRecord};
use crate::sampling::SeedStream;
use crate::solvers::{run_with_reference, SolverConfig};

/// Runs `trials` independent runs seeded from `cfg.seed` and aggregates
/// them. The oracle point, if the problem has one, is computed once.
pub fn ensemble(problem: &Problem, cfg: &SolverConfig, trials: usize) -> Result<EnsembleStats> {
    let oracle = problem.solve_oracle()?;
    ensemble_with_reference(problem, cfg, trials, oracle.as_ref())
}

pub fn ensemble_with_reference(
    problem: &Problem,
    cfg: &SolverConfig,
    trials: usize,
    oracle: Option<&OracleResult>,
) -> Result<EnsembleStats> {
    if trials < 2 {
        return Err(invalid(
            "trials",
            format!("{trials} given, need at least 2"),
        ));
    }
    cfg.check()?;
    let master = SeedStream::new(cfg.seed);
    let x_star = oracle.map(|o| &o.x_star);
    let runs: Vec<Result<RunRecord>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_cfg = SolverConfig {
                seed: master.trial(t).seed(),
                ..cfg.clone()
            };
            run_with_reference(problem, &trial_cfg, x_star)
        })
        .collect();
    // report the first failure in trial order
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let f0_star = oracle.map(|o| o.f0_star(problem.x0())).transpose()?;
    aggregate(&runs, f0_star)
}

/// Per-iteration means and standard errors over runs sharing one recording
/// grid. Samples are reduced in run order.
pub fn aggregate(runs: &[RunRecord], f0_star: Option<f64>) -> Result<EnsembleStats> {
    let first = runs.first().ok_or(crate::error::Error::Empty("run list"))?;
    let ks: Vec<u64> = first.ks().collect();
    for r in runs {
        if r.iterations.len() != ks.len() || !r.ks().eq(ks.iter().copied()) {
            return Err(invalid("runs", "recorded iterations differ between runs"));
        }
    }
    let m = ks.len();
    let column = |pick: &dyn Fn(&crate::record::IterationRecord) -> Option<f64>| -> Vec<Estimate> {
        let mut buf = Vec::with_capacity(runs.len());
        (0..m)
            .map(|j| {
                buf.clear();
                for r in runs {
                    match pick(&r.iterations[j]) {
                        Some(v) => buf.push(v),
                        None => return Estimate::missing(),
                    }
                }
                Estimate::from_samples(&buf)
            })
            .collect()
    };
    Ok(EnsembleStats {
        trial_count: runs.len(),
        alphas: first.iterations.iter().map(|r| r.alpha).collect(),
        batches: first.iterations.iter().map(|r| r.batch_size).collect(),
        residual: column(&|r| Some(r.residual)),
        f0_gap: column(&|r| f0_star.map(|s| r.f0_value - s)),
        dist_sq: column(&|r| r.dist_sq),
        next_step_len: column(&|r| r.next_step_len),
        sample_dist_sq: column(&|r| r.sample_dist_sq),
        f0_star,
        ks,
    })
}
