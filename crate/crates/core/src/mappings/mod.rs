//! Built-in nonexpansive families: halfspace projections, gradient steps on
//! least-squares terms, and the λ-averaging combinator.

mod averaged;
mod halfspace;
mod quadratic;

pub use averaged::{make_averaged, AveragedFamily};
pub use halfspace::{make_projection_family, project_halfspace, Halfspace};
pub use quadratic::{largest_eigenvalue, make_gradient_family, Eta, GradientStep, QuadraticTerm};
