//! Config-driven experiments: build a problem, validate the schedules, run
//! an ensemble and render the trace CSV and the text summary.

mod config;
mod runner;

pub use config::{
    AnalysisSection, BatchSection, ExperimentConfig, MethodSection, OutputSection, ProblemSection,
    RunSection, StepSection,
};
pub use runner::{
    conditions_hold, render_trace_csv, run_experiment, validate_only, ExperimentOutcome,
    ValidationOutcome, TRACE_HEADER,
};
