use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::{
    ensemble_with_reference, estimate_sigma_sq, fit_rate, predicted_exponent, rate_bound,
    sigma_probes, theorem_constants, OracleMethod, OracleResult, PredictedRate, TheoremConstants,
};
use crate::error::Result;
use crate::experiment::ExperimentConfig;
use crate::family::FiniteFamily;
use crate::problem::Problem;
use crate::record::EnsembleStats;
use crate::schedules::{validate, StepKind, ValidationReport};
use crate::solvers::{Method, SolverConfig};

pub const TRACE_HEADER: &str =
    "k,alpha,batch,residual_mean,residual_se,f0gap_mean,f0gap_se,msq_dist_mean,msq_dist_se";

/// Whether the schedule conditions matching `method` hold from some `k0`
/// within the horizon.
pub fn conditions_hold(method: Method, report: &ValidationReport) -> bool {
    match method {
        Method::Km => report.certification.step_sum_diverges,
        Method::Halpern => report.deterministic_halpern_conditions_hold(),
        Method::StochKm => report.km_conditions_hold(),
        Method::StochHalpern => report.halpern_conditions_hold(),
        Method::StochHalpernLambda(_) => report.lambda_conditions_hold(),
    }
}

/// Oracle point, variance estimate and constants, when the problem has
/// oracle data.
struct Analysis {
    oracle: Option<OracleResult>,
    sigma_sq: Option<f64>,
    probe_count: usize,
    constants: Option<TheoremConstants>,
}

fn analyse(problem: &Problem, cfg: &ExperimentConfig, solver: &SolverConfig) -> Result<Analysis> {
    let Some(oracle) = problem.solve_oracle()? else {
        return Ok(Analysis {
            oracle: None,
            sigma_sq: None,
            probe_count: 0,
            constants: None,
        });
    };
    let probes = sigma_probes(
        &oracle.x_star,
        problem.x0(),
        cfg.probe_count(),
        cfg.probe_seed(),
    )?;
    let sigma_sq = estimate_sigma_sq(problem.family(), &probes)?;
    let constants = theorem_constants(problem, &oracle, sigma_sq, &solver.batch)?;
    Ok(Analysis {
        oracle: Some(oracle),
        sigma_sq: Some(sigma_sq),
        probe_count: probes.len(),
        constants: Some(constants),
    })
}

#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    pub method: Method,
    pub solver: SolverConfig,
    pub report: ValidationReport,
    pub conditions_hold: bool,
    pub oracle: Option<OracleResult>,
    pub sigma_sq: Option<f64>,
    pub constants: Option<TheoremConstants>,
}

/// Checks the schedules and previews the theorem constants without running
/// any trials.
pub fn validate_only(cfg: &ExperimentConfig) -> Result<ValidationOutcome> {
    let solver = cfg.solver_config()?;
    let problem = cfg.build_problem()?;
    let report = validate(
        &solver.step,
        &solver.batch,
        solver.iterations,
        solver.method.lambda(),
    );
    let analysis = analyse(&problem, cfg, &solver)?;
    Ok(ValidationOutcome {
        method: solver.method,
        conditions_hold: conditions_hold(solver.method, &report),
        solver,
        report,
        oracle: analysis.oracle,
        sigma_sq: analysis.sigma_sq,
        constants: analysis.constants,
    })
}

impl ValidationOutcome {
    pub fn render(&self) -> String {
        let mut s = String::new();
        write_validation(&mut s, self.method, &self.solver, &self.report);
        if let Some(c) = &self.constants {
            s.push('\n');
            write_constants(&mut s, c, self.sigma_sq, None);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub solver: SolverConfig,
    pub trials: usize,
    pub problem_desc: String,
    pub report: ValidationReport,
    pub conditions_hold: bool,
    pub oracle: Option<OracleResult>,
    pub sigma_sq: Option<f64>,
    pub probe_count: usize,
    pub constants: Option<TheoremConstants>,
    /// `rate_bound` at the full horizon.
    pub rate_bound: Option<f64>,
    pub stats: EnsembleStats,
    pub fit_window: (u64, u64),
    /// Fitted slope, or why the fit was not possible.
    pub slope: std::result::Result<f64, String>,
    pub predicted: Option<PredictedRate>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let solver = cfg.solver_config()?;
    let problem = cfg.build_problem()?;
    let report = validate(
        &solver.step,
        &solver.batch,
        solver.iterations,
        solver.method.lambda(),
    );
    let hold = conditions_hold(solver.method, &report);
    if !hold {
        log::warn!(
            "schedule conditions for {} do not hold within the horizon; running anyway",
            solver.method
        );
    }
    let analysis = analyse(&problem, cfg, &solver)?;
    let stats = ensemble_with_reference(&problem, &solver, cfg.trials(), analysis.oracle.as_ref())?;
    let bound = analysis
        .constants
        .as_ref()
        .map(|c| rate_bound(c, &solver.step, &solver.batch, solver.iterations))
        .transpose()?;
    let fit_window = cfg.fit_window();
    let slope = fit_rate(&stats, fit_window).map_err(|e| e.to_string());
    let predicted = match solver.step.kind() {
        StepKind::Poly { a } | StepKind::LambdaPoly { a, .. } => predicted_exponent(a).ok(),
        StepKind::Constant { .. } => None,
    };
    Ok(ExperimentOutcome {
        trials: cfg.trials(),
        problem_desc: format!(
            "{} family, n = {}, dimension = {}, x0 = {}",
            problem.family().kind(),
            problem.family().len(),
            problem.dim(),
            fmt_vec(problem.x0())
        ),
        report,
        conditions_hold: hold,
        oracle: analysis.oracle,
        sigma_sq: analysis.sigma_sq,
        probe_count: analysis.probe_count,
        constants: analysis.constants,
        rate_bound: bound,
        stats,
        fit_window,
        slope,
        predicted,
        solver,
    })
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// One row per recorded iteration, 17 significant digits.
pub fn render_trace_csv(stats: &EnsembleStats) -> String {
    let mut s = String::with_capacity(200 * (stats.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for j in 0..stats.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            stats.ks[j],
            num(stats.alphas[j]),
            stats.batches[j],
            num(stats.residual[j].mean),
            num(stats.residual[j].se),
            num(stats.f0_gap[j].mean),
            num(stats.f0_gap[j].se),
            num(stats.dist_sq[j].mean),
            num(stats.dist_sq[j].se),
        );
    }
    s
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), num)
}

fn write_validation(s: &mut String, method: Method, solver: &SolverConfig, r: &ValidationReport) {
    let _ = writeln!(s, "[validation]");
    let _ = writeln!(s, "horizon K = {}", r.horizon);
    let _ = writeln!(s, "step: {}", solver.step);
    if method.is_stochastic() {
        let _ = writeln!(s, "batch: {}", solver.batch);
        let _ = writeln!(s, "1/b_k <= alpha_k: {}", r.one_over_b_le_alpha);
        let _ = writeln!(s, "1/b_k <= alpha_k^2: {}", r.one_over_b_le_alpha_sq);
    }
    if let Some(c) = &r.alpha_le_lambda_bound {
        let _ = writeln!(s, "alpha_k <= (2 lambda - 1)/(2 (1 - lambda)): {c}");
    }
    let _ = writeln!(s, "sum alpha_k = {}", num(r.step_sum));
    let _ = writeln!(
        s,
        "sum alpha_k closed-form lower bound = {}",
        opt(r.step_sum_lower_bound)
    );
    let _ = writeln!(s, "sum alpha_k^2 = {}", num(r.step_sq_sum));
    let _ = writeln!(
        s,
        "sum alpha_k^2 closed-form upper bound = {}",
        opt(r.step_sq_sum_upper_bound)
    );
    let _ = writeln!(s, "sum |alpha_(k+1) - alpha_k| = {}", num(r.step_variation));
    if method.is_stochastic() {
        let _ = writeln!(s, "sum 1/sqrt(b_k) = {}", num(r.partial_sum_inv_sqrt_b));
        let _ = writeln!(s, "sum 1/b_k = {}", num(r.partial_sum_inv_b));
        if solver.batch.is_increasing() {
            let _ = writeln!(
                s,
                "sum 1/sqrt(formula b_k) = {}",
                num(r.formula_sum_inv_sqrt_b)
            );
            let _ = writeln!(s, "sum 1/(formula b_k) = {}", num(r.formula_sum_inv_b));
        }
        match r.b_bound {
            Some(b) => {
                let _ = writeln!(s, "B = {}", num(b));
                let _ = writeln!(
                    s,
                    "sum 1/(formula b_k) <= B: {}; sum 1/b_k <= B: {}; sum 1/sqrt(b_k) <= B: {}",
                    r.formula_inv_b_within_b_bound().unwrap_or(false),
                    r.inv_b_within_b_bound().unwrap_or(false),
                    r.inv_sqrt_b_within_b_bound().unwrap_or(false)
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "B = undefined (batch sizes do not have summable reciprocals)"
                );
            }
        }
        if let Some(b) = r.inv_sqrt_b_bound {
            let _ = writeln!(s, "bound on sum 1/sqrt(b_k) = {}", num(b));
        }
        match r.cap_first_hit {
            Some(k) => {
                let _ = writeln!(s, "warning: batch cap reached at k = {k}");
            }
            None => {
                let _ = writeln!(s, "batch cap not reached");
            }
        }
        let c = &r.certification;
        let _ = writeln!(
            s,
            "certified: alpha_k -> 0: {}, sum 1/sqrt(b_k) < inf: {}, sum 1/b_k < inf: {}",
            c.step_vanishes, c.inv_sqrt_batch_summable, c.inv_batch_summable
        );
    }
    let hold = conditions_hold(method, r);
    let _ = writeln!(
        s,
        "conditions for {}: {}",
        method,
        if hold { "hold" } else { "do not hold" }
    );
}

fn write_constants(
    s: &mut String,
    c: &TheoremConstants,
    sigma_sq: Option<f64>,
    probes: Option<usize>,
) {
    let _ = writeln!(s, "[theorem constants]");
    match (sigma_sq, probes) {
        (Some(v), Some(p)) => {
            let _ = writeln!(s, "sigma_sq_hat = {} (max over {p} probes)", num(v));
        }
        (Some(v), None) => {
            let _ = writeln!(s, "sigma_sq_hat = {}", num(v));
        }
        _ => {}
    }
    let _ = writeln!(s, "|x0 - x*|^2 = {}", num(c.dist0_sq));
    let _ = writeln!(s, "M = {}", num(c.m));
    let _ = writeln!(s, "M1 = {}", num(c.m1));
    let _ = writeln!(s, "M2 = {}", num(c.m2));
    let _ = writeln!(s, "M3 = {}", num(c.m3));
    let _ = writeln!(s, "B = {}", opt(c.b_bound));
}

fn write_oracle(s: &mut String, o: &OracleResult, f0_star: Option<f64>) {
    let _ = writeln!(s, "[oracle]");
    let method = match o.method {
        OracleMethod::Dykstra { sweeps } => format!("dykstra ({sweeps} sweeps)"),
        OracleMethod::NormalEquations { condition } => {
            format!("normal_equations (condition {condition:.3e})")
        }
        OracleMethod::Known => "known".to_string(),
    };
    let _ = writeln!(s, "method: {method}");
    let _ = writeln!(s, "x* = {}", fmt_vec(&o.x_star));
    let _ = writeln!(s, "residual at x* = {}", num(o.residual_at_star));
    if let Some(f) = f0_star {
        let _ = writeln!(s, "f0* = {}", num(f));
    }
}

impl ExperimentOutcome {
    pub fn trace_csv(&self) -> String {
        render_trace_csv(&self.stats)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let solver = &self.solver;
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "problem: {}", self.problem_desc);
        let _ = writeln!(s, "method: {}", solver.method);
        let _ = writeln!(
            s,
            "iterations = {}, record_every = {}, trials = {}, seed = {}",
            solver.iterations, solver.record_every, self.trials, solver.seed
        );
        if let Some(o) = &self.oracle {
            s.push('\n');
            write_oracle(&mut s, o, self.stats.f0_star);
        }
        if let Some(c) = &self.constants {
            s.push('\n');
            write_constants(&mut s, c, self.sigma_sq, Some(self.probe_count));
            if let Some(r) = self.rate_bound {
                let _ = writeln!(s, "rate bound at K = {}: {}", solver.iterations, num(r));
            }
        }
        s.push('\n');
        write_validation(&mut s, solver.method, solver, &self.report);

        s.push('\n');
        let _ = writeln!(s, "[rate]");
        let (lo, hi) = self.fit_window;
        let _ = writeln!(s, "fit window = [{lo}, {hi}]");
        match &self.slope {
            Ok(v) => {
                let _ = writeln!(s, "fitted slope = {}", num(*v));
            }
            Err(e) => {
                let _ = writeln!(s, "fitted slope unavailable: {e}");
            }
        }
        match &self.predicted {
            Some(p) => {
                let _ = writeln!(s, "predicted rate = {p} (exponent {})", p.exponent);
            }
            None => {
                let _ = writeln!(s, "predicted rate = none for this step schedule");
            }
        }

        s.push('\n');
        let _ = writeln!(s, "[final iterate]");
        let j = self.stats.len() - 1;
        let st = &self.stats;
        let _ = writeln!(s, "k = {}", st.ks[j]);
        let _ = writeln!(
            s,
            "residual = {} +- {}",
            num(st.residual[j].mean),
            num(st.residual[j].se)
        );
        let _ = writeln!(
            s,
            "f0 gap = {} +- {}",
            num(st.f0_gap[j].mean),
            num(st.f0_gap[j].se)
        );
        let _ = writeln!(
            s,
            "|x_K - x*|^2 = {} +- {}",
            num(st.dist_sq[j].mean),
            num(st.dist_sq[j].se)
        );
        s
    }

    /// Writes `<prefix>_trace.csv` and `<prefix>_summary.txt`.
    pub fn write(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        let base = prefix.as_os_str().to_string_lossy().into_owned();
        let trace = PathBuf::from(format!("{base}_trace.csv"));
        let summary = PathBuf::from(format!("{base}_summary.txt"));
        if let Some(dir) = trace.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&trace, self.trace_csv())?;
        std::fs::write(&summary, self.summary())?;
        Ok((trace, summary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: &str, batch: &str, iterations: u64, record_every: u64) -> ExperimentConfig {
        let src = format!(
            r#"
[problem]
family = "halfspaces"
rows = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]
x0 = [1.0, 2.0]

[method]
name = "{method}"

[step]
kind = "poly"
a = 0.5

{batch}

[run]
iterations = {iterations}
record_every = {record_every}
trials = 3
seed = 5
"#
        );
        ExperimentConfig::parse(&src).unwrap()
    }

    #[test]
    fn deterministic_trace_shape() {
        let out = run_experiment(&config("halpern", "", 100, 10)).unwrap();
        let csv = out.trace_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len() - 1, 11);
        for l in &lines[1..] {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 9);
            for se in [f[4], f[6], f[8]] {
                assert_eq!(se.parse::<f64>().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn constant_batch_summary_flags_condition() {
        let cfg = config(
            "stoch_halpern",
            "[batch]\nkind = \"constant\"\nsize = 4",
            200,
            10,
        );
        let out = run_experiment(&cfg).unwrap();
        let summary = out.summary();
        assert!(
            summary.contains("1/b_k <= alpha_k^2: never within horizon"),
            "{summary}"
        );
        assert!(!out.conditions_hold);
        assert_eq!(out.stats.len(), 21);
    }

    #[test]
    fn validate_exponential_batch() {
        let cfg = config(
            "stoch_halpern",
            "[batch]\nkind = \"exponential\"\nb0 = 32\ndelta = 2",
            100,
            1,
        );
        let v = validate_only(&cfg).unwrap();
        assert!(v.conditions_hold);
        assert_eq!(v.constants.unwrap().b_bound, Some(0.0625));
        assert!(v.render().contains("B = 6.2500000000000000e-2"));
    }

    #[test]
    fn csv_is_reproducible() {
        let cfg = config(
            "stoch_halpern",
            "[batch]\nkind = \"exponential\"\nb0 = 4\ndelta = 1.01",
            300,
            7,
        );
        let a = run_experiment(&cfg).unwrap().trace_csv();
        let b = run_experiment(&cfg).unwrap().trace_csv();
        assert_eq!(a, b);
    }
}
