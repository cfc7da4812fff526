//! Python bindings: schedules, problems, single runs, ensembles, oracles
//! and config-driven experiments.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stochfix::diagnostics::{self, estimate_sigma_sq, sigma_probes, OracleMethod, OracleResult};
use stochfix::experiment::{run_experiment, validate_only, ExperimentConfig};
use stochfix::{
    BatchSchedule, EnsembleStats, Estimate, Eta, FiniteFamily, Halfspace, Method, Point, Problem,
    QuadraticTerm, SolverConfig, StepSchedule,
};

create_exception!(stochfix_py, StochfixError, PyException);

fn err(e: stochfix::Error) -> PyErr {
    StochfixError::new_err(e.to_string())
}

fn point(coords: Vec<f64>) -> PyResult<Point> {
    Point::new(coords).map_err(err)
}

fn parse_method(name: &str, lam: Option<f64>) -> PyResult<Method> {
    Ok(match (name, lam) {
        ("km", None) => Method::Km,
        ("halpern", None) => Method::Halpern,
        ("stoch_km", None) => Method::StochKm,
        ("stoch_halpern", None) => Method::StochHalpern,
        ("stoch_halpern_lambda", Some(l)) => Method::StochHalpernLambda(l),
        ("stoch_halpern_lambda", None) => {
            return Err(StochfixError::new_err("stoch_halpern_lambda needs lam"))
        }
        (other, Some(_)) if other != "stoch_halpern_lambda" => {
            return Err(StochfixError::new_err(format!("{other} takes no lam")))
        }
        (other, _) => return Err(StochfixError::new_err(format!("unknown method {other:?}"))),
    })
}

/// Step-size schedule `α_k`.
#[pyclass(name = "Step", frozen)]
struct PyStep(StepSchedule);

#[pymethods]
impl PyStep {
    #[staticmethod]
    fn poly(a: f64) -> PyResult<Self> {
        StepSchedule::poly(a).map(Self).map_err(err)
    }

    #[staticmethod]
    fn lambda_poly(a: f64, lam: f64) -> PyResult<Self> {
        StepSchedule::lambda_poly(a, lam).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(c: f64) -> PyResult<Self> {
        StepSchedule::constant(c).map(Self).map_err(err)
    }

    fn at(&self, k: u64) -> f64 {
        self.0.at(k)
    }

    fn __repr__(&self) -> String {
        format!("Step.{}", self.0)
    }
}

/// Batch-size schedule `b_k`.
#[pyclass(name = "Batch", frozen)]
struct PyBatch(BatchSchedule);

#[pymethods]
impl PyBatch {
    #[staticmethod]
    fn constant(size: u64) -> PyResult<Self> {
        BatchSchedule::constant(size).map(Self).map_err(err)
    }

    #[staticmethod]
    fn polynomial(a0: f64, b0: f64, c: f64) -> PyResult<Self> {
        BatchSchedule::polynomial(a0, b0, c).map(Self).map_err(err)
    }

    #[staticmethod]
    fn exponential(b0: f64, delta: f64) -> PyResult<Self> {
        BatchSchedule::exponential(b0, delta).map(Self).map_err(err)
    }

    fn with_cap(&self, cap: u64) -> PyResult<Self> {
        self.0.with_cap(cap).map(Self).map_err(err)
    }

    fn at(&self, k: u64) -> u64 {
        self.0.at(k)
    }

    /// Closed-form bound on `Σ 1/b_k`; `None` for constant batches.
    fn b_bound(&self) -> Option<f64> {
        self.0.b_bound()
    }

    fn __repr__(&self) -> String {
        format!("Batch.{}", self.0)
    }
}

/// A family of nonexpansive mappings with its anchor point.
#[pyclass(name = "Problem", frozen)]
struct PyProblem(Problem);

#[pymethods]
impl PyProblem {
    /// Projections onto halfspaces; each row is `[a_1, ..., a_d, beta]` for
    /// `<a, x> <= beta`.
    #[staticmethod]
    fn feasibility(rows: Vec<Vec<f64>>, x0: Vec<f64>) -> PyResult<Self> {
        let hs = rows
            .into_iter()
            .map(|mut r| {
                let beta = r
                    .pop()
                    .ok_or_else(|| StochfixError::new_err("empty halfspace row"))?;
                Halfspace::new(point(r)?, beta).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Problem::feasibility(hs, point(x0)?).map(Self).map_err(err)
    }

    /// Gradient steps on `½‖A_i x − b_i‖²`; `terms` is a list of `(A, b)`
    /// with `A` given as rows. `eta=None` picks `1/L_max`.
    #[staticmethod]
    #[pyo3(signature = (terms, x0, eta=None))]
    fn least_squares(
        terms: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
        x0: Vec<f64>,
        eta: Option<f64>,
    ) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(a, b)| QuadraticTerm::from_rows(&a, b).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        let eta = eta.map_or(Eta::Auto { seed: 0 }, Eta::Fixed);
        Problem::least_squares(terms, eta, point(x0)?)
            .map(Self)
            .map_err(err)
    }

    /// The problem described by the `[problem]` section of a config file.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        let cfg = ExperimentConfig::load(&path).map_err(err)?;
        cfg.build_problem().map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.family().len()
    }

    #[getter]
    fn x0(&self) -> Vec<f64> {
        self.0.x0().coords().to_vec()
    }

    /// Exact mean mapping `T(x)`.
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = point(x)?;
        self.0
            .family()
            .exact_mean(&x)
            .map(Point::into_vec)
            .map_err(err)
    }

    fn apply_component(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = point(x)?;
        self.0
            .family()
            .apply_component(i, &x)
            .map(Point::into_vec)
            .map_err(err)
    }

    /// Projection of `x0` onto the fixed-point set, or `None` for families
    /// without oracle data.
    fn oracle<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(o) = self.0.solve_oracle().map_err(err)? else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("x_star", o.x_star.coords().to_vec())?;
        d.set_item("residual", o.residual_at_star)?;
        d.set_item("f0_star", o.f0_star(self.0.x0()).map_err(err)?)?;
        let method = match o.method {
            OracleMethod::Dykstra { sweeps } => format!("dykstra ({sweeps} sweeps)"),
            OracleMethod::NormalEquations { condition } => {
                format!("normal equations (condition {condition:.3e})")
            }
            OracleMethod::Known => "known".to_string(),
        };
        d.set_item("method", method)?;
        Ok(Some(d))
    }

    /// Largest component variance over random probes around the oracle
    /// point.
    #[pyo3(signature = (probes=256, seed=0))]
    fn sigma_sq(&self, probes: usize, seed: u64) -> PyResult<f64> {
        let o = self
            .0
            .solve_oracle()
            .map_err(err)?
            .ok_or_else(|| StochfixError::new_err("problem has no oracle"))?;
        let pts = sigma_probes(&o.x_star, self.0.x0(), probes, seed).map_err(err)?;
        estimate_sigma_sq(self.0.family(), &pts).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Problem(dim={}, n={})", self.0.dim(), self.0.family().len())
    }
}

#[allow(clippy::too_many_arguments)]
fn solver_config(
    method: &str,
    step: &PyStep,
    batch: Option<&PyBatch>,
    iterations: u64,
    seed: u64,
    record_every: u64,
    lam: Option<f64>,
) -> PyResult<SolverConfig> {
    let cfg = SolverConfig {
        method: parse_method(method, lam)?,
        step: step.0,
        batch: batch.map_or_else(
            || BatchSchedule::constant(1).expect("size 1 is valid"),
            |b| b.0,
        ),
        iterations,
        seed,
        record_every,
    };
    cfg.check().map_err(err)?;
    Ok(cfg)
}

#[pyfunction]
fn f0_value(x: Vec<f64>, x0: Vec<f64>) -> PyResult<f64> {
    stochfix::f0_value(&point(x)?, &point(x0)?).map_err(err)
}

#[pyfunction]
fn project_halfspace(normal: Vec<f64>, offset: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let h = Halfspace::new(point(normal)?, offset).map_err(err)?;
    stochfix::project_halfspace(&h, &point(x)?)
        .map(Point::into_vec)
        .map_err(err)
}

/// Finite-horizon schedule sums and condition scans.
#[pyfunction]
#[pyo3(signature = (step, batch, horizon, lam=None))]
fn validate<'py>(
    py: Python<'py>,
    step: &PyStep,
    batch: &PyBatch,
    horizon: u64,
    lam: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = stochfix::validate(&step.0, &batch.0, horizon, lam);
    let d = PyDict::new(py);
    d.set_item("step_sum", r.step_sum)?;
    d.set_item("step_sq_sum", r.step_sq_sum)?;
    d.set_item("step_variation", r.step_variation)?;
    d.set_item("step_sum_lower_bound", r.step_sum_lower_bound)?;
    d.set_item("step_sq_sum_upper_bound", r.step_sq_sum_upper_bound)?;
    d.set_item("sum_inv_sqrt_b", r.partial_sum_inv_sqrt_b)?;
    d.set_item("sum_inv_b", r.partial_sum_inv_b)?;
    d.set_item("formula_sum_inv_b", r.formula_sum_inv_b)?;
    d.set_item("b_bound", r.b_bound)?;
    d.set_item("inv_b_le_alpha_from", r.one_over_b_le_alpha.holds_from)?;
    d.set_item(
        "inv_b_le_alpha_sq_from",
        r.one_over_b_le_alpha_sq.holds_from,
    )?;
    d.set_item("cap_first_hit", r.cap_first_hit)?;
    Ok(d)
}

/// One solver run; returns the recorded trace as lists.
#[pyfunction]
#[pyo3(signature = (problem, method, step, iterations, batch=None, seed=0, record_every=1, lam=None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    method: &str,
    step: &PyStep,
    iterations: u64,
    batch: Option<&PyBatch>,
    seed: u64,
    record_every: u64,
    lam: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = solver_config(method, step, batch, iterations, seed, record_every, lam)?;
    let rec = py.detach(|| stochfix::run(&problem.0, &cfg)).map_err(err)?;
    let d = PyDict::new(py);
    let its = &rec.iterations;
    d.set_item("k", its.iter().map(|r| r.k).collect::<Vec<_>>())?;
    d.set_item("alpha", its.iter().map(|r| r.alpha).collect::<Vec<_>>())?;
    d.set_item(
        "batch",
        its.iter().map(|r| r.batch_size).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "residual",
        its.iter().map(|r| r.residual).collect::<Vec<_>>(),
    )?;
    d.set_item("f0", its.iter().map(|r| r.f0_value).collect::<Vec<_>>())?;
    d.set_item("dist_sq", its.iter().map(|r| r.dist_sq).collect::<Vec<_>>())?;
    d.set_item("final_point", rec.final_point.coords().to_vec())?;
    Ok(d)
}

fn estimates(py: Python<'_>, v: &[Estimate]) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", v.iter().map(|e| e.mean).collect::<Vec<_>>())?;
    d.set_item("se", v.iter().map(|e| e.se).collect::<Vec<_>>())?;
    Ok(d.unbind())
}

fn stats_dict<'py>(py: Python<'py>, s: &EnsembleStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("trials", s.trial_count)?;
    d.set_item("k", s.ks.clone())?;
    d.set_item("alpha", s.alphas.clone())?;
    d.set_item("batch", s.batches.clone())?;
    d.set_item("residual", estimates(py, &s.residual)?)?;
    d.set_item("f0_gap", estimates(py, &s.f0_gap)?)?;
    d.set_item("dist_sq", estimates(py, &s.dist_sq)?)?;
    d.set_item("f0_star", s.f0_star)?;
    Ok(d)
}

/// Independent trials aggregated per recorded iteration.
#[pyfunction]
#[pyo3(signature = (problem, method, step, iterations, trials, batch=None, seed=0, record_every=1, lam=None))]
#[allow(clippy::too_many_arguments)]
fn ensemble<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    method: &str,
    step: &PyStep,
    iterations: u64,
    trials: usize,
    batch: Option<&PyBatch>,
    seed: u64,
    record_every: u64,
    lam: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = solver_config(method, step, batch, iterations, seed, record_every, lam)?;
    let stats = py
        .detach(|| diagnostics::ensemble(&problem.0, &cfg, trials))
        .map_err(err)?;
    stats_dict(py, &stats)
}

/// Least-squares slope of `log y` against `log k` over `window`.
#[pyfunction]
fn fit_slope(ks: Vec<u64>, ys: Vec<f64>, window: (u64, u64)) -> PyResult<f64> {
    diagnostics::fit_slope(&ks, &ys, window).map_err(err)
}

/// Runs the experiment a config file describes, without writing files.
#[pyfunction]
#[pyo3(signature = (path, trials=None, seed=None))]
fn run_config<'py>(
    py: Python<'py>,
    path: PathBuf,
    trials: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = ExperimentConfig::load(&path).map_err(err)?;
    if let Some(t) = trials {
        cfg.set_trials(t).map_err(err)?;
    }
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    let out = py.detach(|| run_experiment(&cfg)).map_err(err)?;
    let d = stats_dict(py, &out.stats)?;
    d.set_item("summary", out.summary())?;
    d.set_item("trace_csv", out.trace_csv())?;
    d.set_item("slope", out.slope.as_ref().ok().copied())?;
    d.set_item("conditions_hold", out.conditions_hold)?;
    Ok(d)
}

/// `(conditions_hold, report)` for a config file.
#[pyfunction]
fn validate_config(path: PathBuf) -> PyResult<(bool, String)> {
    let cfg = ExperimentConfig::load(&path).map_err(err)?;
    let v = validate_only(&cfg).map_err(err)?;
    Ok((v.conditions_hold, v.render()))
}

/// Projection of `x0` onto an intersection of halfspaces by Dykstra's
/// algorithm; rows as in `Problem.feasibility`.
#[pyfunction]
fn oracle_feasibility(rows: Vec<Vec<f64>>, x0: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = PyProblem::feasibility(rows, x0)?;
    let o: OracleResult =
        p.0.solve_oracle()
            .map_err(err)?
            .expect("feasibility problems carry oracle data");
    Ok(o.x_star.into_vec())
}

#[pymodule]
fn stochfix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StochfixError", m.py().get_type::<StochfixError>())?;
    m.add_class::<PyStep>()?;
    m.add_class::<PyBatch>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(f0_value, m)?)?;
    m.add_function(wrap_pyfunction!(project_halfspace, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(fit_slope, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_feasibility, m)?)?;
    Ok(())
}
