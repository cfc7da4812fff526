use crate::diagnostics::{oracle_feasibility, oracle_quadratic, OracleResult};
use crate::error::{Error, Result};
use crate::family::{FamilyKind, FiniteFamily, MappingFamily};
use crate::mappings::{
    make_gradient_family, make_projection_family, Eta, Halfspace, QuadraticTerm,
};
use crate::point::Point;

/// Data sufficient to compute `P_Fix(T)(x0)` independently of the solvers.
#[derive(Debug, Clone)]
pub enum OracleInfo {
    /// Fix(T) is the intersection of these halfspaces.
    Halfspaces(Vec<Halfspace>),
    /// Fix(T) is the set of least-squares solutions of these terms.
    Quadratic(Vec<QuadraticTerm>),
    /// The projection is known in closed form.
    Known(Point),
}

/// A fixed-point problem: a family, the anchor `x0`, and optionally what
/// the oracle needs.
#[derive(Debug, Clone)]
pub struct Problem {
    family: MappingFamily,
    x0: Point,
    oracle: Option<OracleInfo>,
}

impl Problem {
    pub fn new(family: MappingFamily, x0: Point, oracle: Option<OracleInfo>) -> Result<Self> {
        x0.check_dim(family.dim())?;
        if let Some(OracleInfo::Known(p)) = &oracle {
            p.check_dim(family.dim())?;
        }
        Ok(Problem { family, x0, oracle })
    }

    /// Convex feasibility over halfspaces, `T = (1/n) Σ P_i`.
    pub fn feasibility(halfspaces: Vec<Halfspace>, x0: Point) -> Result<Self> {
        let family = make_projection_family(&halfspaces)?;
        Problem::new(family, x0, Some(OracleInfo::Halfspaces(halfspaces)))
    }

    /// Least squares `min (1/n) Σ ½‖A_i x − b_i‖²` with `T_i = Id − η∇f_i`.
    pub fn least_squares(terms: Vec<QuadraticTerm>, eta: Eta, x0: Point) -> Result<Self> {
        let family = make_gradient_family(&terms, eta)?;
        Problem::new(family, x0, Some(OracleInfo::Quadratic(terms)))
    }

    pub fn family(&self) -> &MappingFamily {
        &self.family
    }

    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn oracle_info(&self) -> Option<&OracleInfo> {
        self.oracle.as_ref()
    }

    /// Computes `x* = P_Fix(T)(x0)` with the oracle matching the problem
    /// data, and checks that it is a fixed point of the exact mean.
    pub fn solve_oracle(&self) -> Result<Option<OracleResult>> {
        let result = match &self.oracle {
            None => return Ok(None),
            Some(OracleInfo::Halfspaces(hs)) => oracle_feasibility(hs, &self.x0)?,
            Some(OracleInfo::Quadratic(terms)) => oracle_quadratic(terms, &self.x0)?,
            Some(OracleInfo::Known(p)) => OracleResult::known(p.clone()),
        };
        let residual = self.family.residual(&result.x_star);
        if residual > crate::diagnostics::ORACLE_RESIDUAL_TOL {
            let what = match self.family.kind() {
                FamilyKind::ProjectionMean => "projection family",
                FamilyKind::GradientMean => "gradient family",
                FamilyKind::Custom => "custom family",
            };
            return Err(Error::OracleFailed(format!(
                "oracle point has residual {residual:.3e} under the {what} mean"
            )));
        }
        Ok(Some(OracleResult {
            residual_at_star: residual,
            ..result
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn anchor_dimension_checked() {
        let hs = vec![Halfspace::new(p(&[1.0, 0.0]), 0.0).unwrap()];
        assert!(matches!(
            Problem::feasibility(hs, p(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oracle_point_is_fixed() {
        let hs = vec![
            Halfspace::new(p(&[1.0, 0.0]), 0.0).unwrap(),
            Halfspace::new(p(&[1.0, 1.0]), 0.0).unwrap(),
        ];
        let prob = Problem::feasibility(hs, p(&[1.0, 2.0])).unwrap();
        let o = prob.solve_oracle().unwrap().unwrap();
        assert!(o.residual_at_star <= 1e-8);
        assert!(o.x_star.dist_sq(&p(&[-0.5, 0.5])).unwrap().sqrt() < 1e-9);
    }

    #[test]
    fn wrong_known_point_is_rejected() {
        let hs = vec![Halfspace::new(p(&[1.0]), 0.0).unwrap()];
        let fam = make_projection_family(&hs).unwrap();
        let prob = Problem::new(fam, p(&[2.0]), Some(OracleInfo::Known(p(&[1.0])))).unwrap();
        assert!(matches!(prob.solve_oracle(), Err(Error::OracleFailed(_))));
    }
}
