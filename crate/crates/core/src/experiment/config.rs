use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mappings::{Eta, Halfspace, QuadraticTerm};
use crate::point::Point;
use crate::problem::Problem;
use crate::schedules::{BatchSchedule, StepSchedule};
use crate::solvers::{Method, SolverConfig};

/// A parsed experiment file. See the README for the grammar.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub method: MethodSection,
    pub step: StepSection,
    #[serde(default)]
    pub batch: Option<BatchSection>,
    pub run: RunSection,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub analysis: Option<AnalysisSection>,
    #[serde(skip)]
    source: String,
    #[serde(skip)]
    path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSection {
    /// Explicit halfspaces, one row `[a_1, …, a_d, β]` each.
    Halfspaces { rows: Vec<Vec<f64>>, x0: Vec<f64> },
    /// `n` random halfspaces in `R^dimension` whose intersection has nonempty
    /// interior.
    RandomHalfspaces {
        n: usize,
        dimension: usize,
        data_seed: u64,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    /// `n` random least-squares terms with `rows` equations each.
    RandomQuadratic {
        n: usize,
        dimension: usize,
        #[serde(default = "default_rows")]
        rows: usize,
        data_seed: u64,
        #[serde(default)]
        eta: Option<EtaSpec>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
}

fn default_rows() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Fixed(f64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: String,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub kind: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub kind: String,
    #[serde(default)]
    pub size: Option<u64>,
    #[serde(default)]
    pub a0: Option<f64>,
    #[serde(default)]
    pub b0: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_record_every() -> u64 {
    1
}

fn default_trials() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub fit_window: Option<[u64; 2]>,
    #[serde(default)]
    pub probes: Option<usize>,
    #[serde(default)]
    pub probe_seed: Option<u64>,
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let msg = e.message().trim().to_string();
            match e.span() {
                Some(span) => {
                    Error::Config(format!("line {}: {msg}", line_of_offset(src, span.start)))
                }
                None => Error::Config(msg),
            }
        })?;
        cfg.source = src.to_string();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.path = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Line of `key` inside `[section]`, if written out in the source.
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = "";
        for (i, raw) in self.source.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                current = rest.trim_end_matches(']').trim();
                continue;
            }
            if current == section {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim() == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn field_error(&self, section: &str, key: &str, reason: impl std::fmt::Display) -> Error {
        match self.line_of(section, key) {
            Some(l) => Error::Config(format!("line {l}, field `{section}.{key}`: {reason}")),
            None => Error::Config(format!("field `{section}.{key}`: {reason}")),
        }
    }

    /// Re-raises a parameter error from a constructor as a config error on
    /// `section.key`.
    fn wrap<T>(&self, section: &str, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| self.field_error(section, key, e))
    }

    fn check(&self) -> Result<()> {
        self.method()?;
        self.step_schedule()?;
        self.batch_schedule()?;
        self.solver_config()?;
        if self.run.trials < 2 {
            return Err(self.field_error("run", "trials", "must be at least 2"));
        }
        if let Some(w) = self.analysis.as_ref().and_then(|a| a.fit_window) {
            if w[0] == 0 || w[0] > w[1] {
                return Err(self.field_error("analysis", "fit_window", "needs 1 <= k_lo <= k_hi"));
            }
        }
        self.check_problem_shape()
    }

    fn check_problem_shape(&self) -> Result<()> {
        match &self.problem {
            ProblemSection::Halfspaces { rows, x0 } => {
                if rows.is_empty() {
                    return Err(self.field_error(
                        "problem",
                        "rows",
                        "needs at least one halfspace",
                    ));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != x0.len() + 1 {
                        return Err(self.field_error(
                            "problem",
                            "rows",
                            format!(
                                "row {i} has {} entries, expected dimension + 1 = {}",
                                r.len(),
                                x0.len() + 1
                            ),
                        ));
                    }
                }
            }
            ProblemSection::RandomHalfspaces {
                n, dimension, x0, ..
            }
            | ProblemSection::RandomQuadratic {
                n, dimension, x0, ..
            } => {
                if *n == 0 {
                    return Err(self.field_error("problem", "n", "must be at least 1"));
                }
                if *dimension == 0 {
                    return Err(self.field_error("problem", "dimension", "must be at least 1"));
                }
                if let Some(x0) = x0 {
                    if x0.len() != *dimension {
                        return Err(self.field_error(
                            "problem",
                            "x0",
                            format!("has {} entries, expected {dimension}", x0.len()),
                        ));
                    }
                }
            }
        }
        if let ProblemSection::RandomQuadratic { rows, eta, .. } = &self.problem {
            if *rows == 0 {
                return Err(self.field_error("problem", "rows", "must be at least 1"));
            }
            if let Some(EtaSpec::Word(w)) = eta {
                if w != "auto" {
                    return Err(self.field_error(
                        "problem",
                        "eta",
                        format!("expected \"auto\" or a number, got {w:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        let m = match self.method.name.as_str() {
            "km" => Method::Km,
            "halpern" => Method::Halpern,
            "stoch_km" => Method::StochKm,
            "stoch_halpern" => Method::StochHalpern,
            "stoch_halpern_lambda" => {
                let l = self
                    .method
                    .lambda
                    .ok_or_else(|| self.field_error("method", "lambda", "required by stoch_halpern_lambda"))?;
                self.wrap("method", "lambda", crate::schedules::check_lambda(l))?;
                Method::StochHalpernLambda(l)
            }
            other => {
                return Err(self.field_error(
                    "method",
                    "name",
                    format!("unknown method {other:?}; expected km, halpern, stoch_km, stoch_halpern or stoch_halpern_lambda"),
                ))
            }
        };
        Ok(m)
    }

    fn need(&self, section: &str, key: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| self.field_error(section, key, "missing"))
    }

    pub fn step_schedule(&self) -> Result<StepSchedule> {
        let s = &self.step;
        match s.kind.as_str() {
            "poly" => {
                let a = self.need("step", "a", s.a)?;
                self.wrap("step", "a", StepSchedule::poly(a))
            }
            "lambda_poly" => {
                let a = self.need("step", "a", s.a)?;
                let lambda = self.method.lambda.ok_or_else(|| {
                    self.field_error("method", "lambda", "required by step kind lambda_poly")
                })?;
                self.wrap("step", "a", StepSchedule::lambda_poly(a, lambda))
            }
            "constant" => {
                let c = self.need("step", "c", s.c)?;
                self.wrap("step", "c", StepSchedule::constant(c))
            }
            other => Err(self.field_error(
                "step",
                "kind",
                format!("unknown step kind {other:?}; expected poly, lambda_poly or constant"),
            )),
        }
    }

    pub fn batch_schedule(&self) -> Result<BatchSchedule> {
        let Some(b) = &self.batch else {
            return Ok(BatchSchedule::constant(1).expect("1 is a valid batch size"));
        };
        let sched = match b.kind.as_str() {
            "constant" => {
                let size = b
                    .size
                    .ok_or_else(|| self.field_error("batch", "size", "missing"))?;
                self.wrap("batch", "size", BatchSchedule::constant(size))?
            }
            "polynomial" => {
                let a0 = self.need("batch", "a0", b.a0)?;
                let b0 = self.need("batch", "b0", b.b0)?;
                let c = self.need("batch", "c", b.c)?;
                BatchSchedule::polynomial(a0, b0, c).map_err(|e| match e {
                    Error::InvalidParameter { name, reason } => {
                        let key = name.rsplit('.').next().unwrap_or(name);
                        self.field_error("batch", key, reason)
                    }
                    other => other,
                })?
            }
            "exponential" => {
                let b0 = self.need("batch", "b0", b.b0)?;
                let delta = self.need("batch", "delta", b.delta)?;
                BatchSchedule::exponential(b0, delta).map_err(|e| match e {
                    Error::InvalidParameter { name, reason } => {
                        let key = name.rsplit('.').next().unwrap_or(name);
                        self.field_error("batch", key, reason)
                    }
                    other => other,
                })?
            }
            other => return Err(self.field_error(
                "batch",
                "kind",
                format!(
                    "unknown batch kind {other:?}; expected constant, polynomial or exponential"
                ),
            )),
        };
        match b.cap {
            Some(cap) => self.wrap("batch", "cap", sched.with_cap(cap)),
            None => Ok(sched),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            method: self.method()?,
            step: self.step_schedule()?,
            batch: self.batch_schedule()?,
            iterations: self.run.iterations,
            seed: self.run.seed,
            record_every: self.run.record_every,
        };
        cfg.check().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                let (section, key) = match name {
                    "iterations" | "record_every" => ("run", name),
                    "step" => ("step", "kind"),
                    _ => ("run", name),
                };
                self.field_error(section, key, reason)
            }
            other => other,
        })?;
        Ok(cfg)
    }

    /// Builds the problem. Random families are generated from `data_seed`,
    /// independent of the solver seed.
    pub fn build_problem(&self) -> Result<Problem> {
        let wrap = |r: Result<Problem>| r.map_err(|e| self.field_error("problem", "family", e));
        match &self.problem {
            ProblemSection::Halfspaces { rows, x0 } => {
                let hs = rows
                    .iter()
                    .map(|r| {
                        let (a, beta) = r.split_at(r.len() - 1);
                        Halfspace::new(Point::new(a.to_vec())?, beta[0])
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| self.field_error("problem", "rows", e))?;
                let x0 =
                    Point::new(x0.clone()).map_err(|e| self.field_error("problem", "x0", e))?;
                wrap(Problem::feasibility(hs, x0))
            }
            ProblemSection::RandomHalfspaces {
                n,
                dimension,
                data_seed,
                x0,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                let hs = random_halfspaces(&mut rng, *n, *dimension)?;
                let x0 = match x0 {
                    Some(v) => {
                        Point::new(v.clone()).map_err(|e| self.field_error("problem", "x0", e))?
                    }
                    None => Point::new(
                        (0..*dimension)
                            .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
                            .collect(),
                    )?,
                };
                wrap(Problem::feasibility(hs, x0))
            }
            ProblemSection::RandomQuadratic {
                n,
                dimension,
                rows,
                data_seed,
                eta,
                x0,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                let terms = random_quadratic(&mut rng, *n, *dimension, *rows)?;
                let eta = match eta {
                    None | Some(EtaSpec::Word(_)) => Eta::Auto { seed: *data_seed },
                    Some(EtaSpec::Fixed(e)) => Eta::Fixed(*e),
                };
                let x0 = match x0 {
                    Some(v) => {
                        Point::new(v.clone()).map_err(|e| self.field_error("problem", "x0", e))?
                    }
                    None => Point::zeros(*dimension),
                };
                Problem::least_squares(terms, eta, x0).map_err(|e| match e {
                    Error::NonexpansivityViolated { .. } => self.field_error("problem", "eta", e),
                    other => self.field_error("problem", "family", other),
                })
            }
        }
    }

    pub fn trials(&self) -> usize {
        self.run.trials
    }

    pub fn set_trials(&mut self, trials: usize) -> Result<()> {
        if trials < 2 {
            return Err(Error::Config(format!(
                "--trials {trials}: must be at least 2"
            )));
        }
        self.run.trials = trials;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.run.seed = seed;
    }

    pub fn set_prefix(&mut self, prefix: impl Into<String>) {
        self.output = Some(OutputSection {
            prefix: prefix.into(),
        });
    }

    /// Output prefix. A relative prefix from the file resolves against the
    /// working directory; without one the config path minus its extension
    /// is used.
    pub fn prefix(&self) -> PathBuf {
        match (&self.output, &self.path) {
            (Some(o), _) => PathBuf::from(&o.prefix),
            (None, Some(p)) => p.with_extension(""),
            (None, None) => PathBuf::from("experiment"),
        }
    }

    pub fn fit_window(&self) -> (u64, u64) {
        match self.analysis.as_ref().and_then(|a| a.fit_window) {
            Some([lo, hi]) => (lo, hi),
            None => ((self.run.iterations / 100).max(1), self.run.iterations),
        }
    }

    pub fn probe_count(&self) -> usize {
        self.analysis
            .as_ref()
            .and_then(|a| a.probes)
            .unwrap_or(crate::diagnostics::DEFAULT_PROBE_COUNT)
    }

    pub fn probe_seed(&self) -> u64 {
        self.analysis
            .as_ref()
            .and_then(|a| a.probe_seed)
            .unwrap_or(0)
    }
}

/// Halfspaces `⟨a_i, x⟩ ≤ s_i ‖a_i‖` with Gaussian normals and slacks in
/// `[0, 1/2)`, so the origin is interior to the intersection.
fn random_halfspaces(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<Vec<Halfspace>> {
    (0..n)
        .map(|_| {
            let a: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let slack = 0.5 * rng.random::<f64>();
            let beta = slack * crate::point::norm(&a);
            Halfspace::new(Point::new(a)?, beta)
        })
        .collect()
}

/// Terms with `A_i` Gaussian scaled by `1/√rows` and Gaussian `b_i`.
fn random_quadratic(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    rows: usize,
) -> Result<Vec<QuadraticTerm>> {
    let scale = 1.0 / (rows as f64).sqrt();
    (0..n)
        .map(|_| {
            let a = DMatrix::from_fn(rows, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            let b = DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal));
            QuadraticTerm::new(a, b)
        })
        .collect()
}
