//! Mini-batch stochastic fixed-point iterations for finite families of
//! nonexpansive mappings.
//!
//! The target is `x* = P_Fix(T)(x0)` where `T = (1/n) Σ T_i`. Halpern-type
//! methods anchored at `x0` converge to it in mean square when the step
//! sizes vanish slowly enough and the batch sizes grow fast enough; the
//! [`schedules`] module checks those conditions, [`solvers`] runs the
//! iterations and [`diagnostics`] supplies independent oracles and
//! Monte-Carlo summaries.
//!
//! ```
//! use stochfix::{Halfspace, Point, Problem, SolverConfig, Method, StepSchedule, BatchSchedule, run};
//!
//! let hs = vec![
//!     Halfspace::new(Point::new(vec![1.0, 0.0])?, 0.0)?,
//!     Halfspace::new(Point::new(vec![1.0, 1.0])?, 0.0)?,
//! ];
//! let problem = Problem::feasibility(hs, Point::new(vec![1.0, 2.0])?)?;
//! let cfg = SolverConfig {
//!     method: Method::StochHalpern,
//!     step: StepSchedule::poly(0.5)?,
//!     batch: BatchSchedule::exponential(4.0, 1.01)?.with_cap(1 << 16)?,
//!     iterations: 2000,
//!     seed: 1,
//!     record_every: 100,
//! };
//! let rec = run(&problem, &cfg)?;
//! assert!(rec.last().dist_sq.unwrap() < 0.1);
//! # Ok::<(), stochfix::Error>(())
//! ```

pub mod diagnostics;
mod error;
pub mod experiment;
pub mod family;
pub mod mappings;
mod point;
pub mod problem;
pub mod record;
pub mod sampling;
pub mod schedules;
pub mod solvers;

pub use error::{Error, Result};
pub use family::{exact_mean_apply, CustomMap, FamilyKind, FiniteFamily, MappingFamily};
pub use mappings::{
    make_averaged, make_gradient_family, make_projection_family, project_halfspace, AveragedFamily,
    Eta, Halfspace, QuadraticTerm,
};
pub use point::{f0_value, Point};
pub use problem::{OracleInfo, Problem};
pub use record::{EnsembleStats, Estimate, IterationRecord, RunRecord};
pub use schedules::{validate, BatchSchedule, StepSchedule, ValidationReport};
pub use solvers::{halpern_step, km_step, run, run_with_reference, Method, SolverConfig};
