//! Independent oracles, Monte-Carlo ensembles, variance estimates, the
//! convergence-theory constants and empirical rate fitting.

mod constants;
mod ensemble;
mod oracle;
mod rate;
mod variance;

pub use constants::{rate_bound, theorem_constants, TheoremConstants};
pub use ensemble::{aggregate, ensemble, ensemble_with_reference};
pub use oracle::{
    normal_equation_residual, oracle_feasibility, oracle_quadratic, OracleMethod, OracleResult,
    DYKSTRA_MAX_SWEEPS, DYKSTRA_TOL, ORACLE_RESIDUAL_TOL,
};
pub use rate::{fit_rate, fit_slope, predicted_exponent, running_min_abs, PredictedRate};
pub use variance::{component_variance, estimate_sigma_sq, sigma_probes, DEFAULT_PROBE_COUNT};
