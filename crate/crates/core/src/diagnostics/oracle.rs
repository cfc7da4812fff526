use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mappings::{Halfspace, QuadraticTerm};
use crate::point::{check_dim, dist_sq, norm, Point};

/// Maximum `‖x − T(x)‖` accepted at an oracle point.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-8;
/// Dykstra stops once a full sweep moves the iterate by less than this.
pub const DYKSTRA_TOL: f64 = 1e-12;
pub const DYKSTRA_MAX_SWEEPS: u64 = 1_000_000;

const FEASIBILITY_TOL: f64 = 1e-9;
const NORMAL_EQ_REL_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    Dykstra {
        sweeps: u64,
    },
    /// `condition` is the 2-norm condition number of the normal matrix.
    NormalEquations {
        condition: f64,
    },
    Known,
}

/// `x* = P_Fix(T)(x0)` computed without the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: Point,
    /// `‖x* − T(x*)‖` under the exact mean mapping.
    pub residual_at_star: f64,
    pub method: OracleMethod,
}

impl OracleResult {
    pub fn known(x_star: Point) -> Self {
        OracleResult {
            x_star,
            residual_at_star: 0.0,
            method: OracleMethod::Known,
        }
    }

    /// `f0* = ½‖x* − x0‖²`
    pub fn f0_star(&self, x0: &Point) -> Result<f64> {
        crate::point::f0_value(&self.x_star, x0)
    }
}

/// Projection of `x0` onto the intersection of the halfspaces by Dykstra's
/// cyclic projections with correction terms.
pub fn oracle_feasibility(halfspaces: &[Halfspace], x0: &Point) -> Result<OracleResult> {
    let first = halfspaces.first().ok_or(Error::Empty("halfspace list"))?;
    let d = first.dim();
    check_dim(d, x0.dim())?;
    for h in halfspaces {
        check_dim(d, h.dim())?;
    }
    let n = halfspaces.len();
    let mut x = x0.to_vec();
    let mut corr = vec![0.0; n * d];
    let mut y = vec![0.0; d];
    let mut prev = vec![0.0; d];
    let mut last_change = f64::INFINITY;
    for sweep in 1..=DYKSTRA_MAX_SWEEPS {
        prev.copy_from_slice(&x);
        for (i, h) in halfspaces.iter().enumerate() {
            let p = &mut corr[i * d..(i + 1) * d];
            for ((yj, xj), pj) in y.iter_mut().zip(&x).zip(p.iter()) {
                *yj = xj + pj;
            }
            h.project_into(&y, &mut x);
            for ((pj, yj), xj) in p.iter_mut().zip(&y).zip(&x) {
                *pj = yj - xj;
            }
        }
        last_change = dist_sq(&x, &prev).sqrt();
        if last_change < DYKSTRA_TOL {
            // with an empty intersection the iterates can stall while the
            // corrections keep growing
            let scale = 1.0 + norm(&x);
            if let Some(h) = halfspaces
                .iter()
                .find(|h| h.violation(&x) > FEASIBILITY_TOL * scale)
            {
                return Err(Error::OracleFailed(format!(
                    "Dykstra settled at a point violating a halfspace by {:.3e}; possibly empty intersection",
                    h.violation(&x)
                )));
            }
            return Ok(OracleResult {
                x_star: Point::new(x)?,
                residual_at_star: 0.0,
                method: OracleMethod::Dykstra { sweeps: sweep },
            });
        }
    }
    Err(Error::OracleFailed(format!(
        "Dykstra did not settle within {DYKSTRA_MAX_SWEEPS} sweeps (last change {last_change:.3e})"
    )))
}

/// Unique minimizer of `Σ ½‖A_i x − b_i‖²` from the normal equations
/// `(Σ A_iᵀA_i) x = Σ A_iᵀ b_i`. Fix(T) is a singleton, so `x0` only
/// contributes its dimension.
pub fn oracle_quadratic(terms: &[QuadraticTerm], x0: &Point) -> Result<OracleResult> {
    let first = terms.first().ok_or(Error::Empty("quadratic term list"))?;
    let d = first.dim();
    check_dim(d, x0.dim())?;
    let mut g = DMatrix::<f64>::zeros(d, d);
    let mut c = DVector::<f64>::zeros(d);
    let mut rows = 0;
    for t in terms {
        check_dim(d, t.dim())?;
        g += t.gram();
        c += t.matrix().transpose() * t.rhs();
        rows += t.matrix().nrows();
    }
    let stacked = DMatrix::from_fn(rows, d, {
        let mut idx = Vec::with_capacity(rows);
        for (ti, t) in terms.iter().enumerate() {
            idx.extend((0..t.matrix().nrows()).map(|r| (ti, r)));
        }
        move |r, j| {
            let (ti, tr) = idx[r];
            terms[ti].matrix()[(tr, j)]
        }
    });
    let sv = stacked.singular_values();
    let s_min = if rows < d { 0.0 } else { sv.min() };
    let s_max = sv.max();
    if s_min <= SINGULAR_TOL * s_max.max(1.0) {
        return Err(Error::SingularSystem(format!(
            "the stacked least-squares matrix is rank deficient (smallest singular value {s_min:.3e}); \
             the minimizer is not unique, use a halfspace feasibility family instead"
        )));
    }
    let chol = g.clone().cholesky().ok_or_else(|| {
        Error::SingularSystem(
            "normal matrix is not positive definite; use a halfspace feasibility family instead"
                .into(),
        )
    })?;
    let mut x = chol.solve(&c);
    // one step of iterative refinement
    let r = &c - &g * &x;
    x += chol.solve(&r);
    let r = &c - &g * &x;
    let scale = (&g * &x).norm().max(c.norm()).max(f64::MIN_POSITIVE);
    let rel = r.norm() / scale;
    if rel > NORMAL_EQ_REL_TOL {
        return Err(Error::OracleFailed(format!(
            "normal-equation residual {rel:.3e} exceeds {NORMAL_EQ_REL_TOL:e}"
        )));
    }
    let x_star = Point::new(x.iter().copied().collect())?;
    Ok(OracleResult {
        x_star,
        residual_at_star: 0.0,
        method: OracleMethod::NormalEquations {
            condition: (s_max / s_min).powi(2),
        },
    })
}

/// Relative residual `‖Gx − c‖ / max(‖Gx‖, ‖c‖)` of the normal equations
/// at `x`.
pub fn normal_equation_residual(terms: &[QuadraticTerm], x: &[f64]) -> f64 {
    let d = x.len();
    let xv = DVector::from_column_slice(x);
    let mut gx = DVector::<f64>::zeros(d);
    let mut c = DVector::<f64>::zeros(d);
    for t in terms {
        gx += t.matrix().transpose() * (t.matrix() * &xv);
        c += t.matrix().transpose() * t.rhs();
    }
    let denom = gx.norm().max(c.norm());
    if denom == 0.0 {
        return 0.0;
    }
    norm((&gx - &c).as_slice()) / denom
}
