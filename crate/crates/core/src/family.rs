//! Finite families of component mappings `T_1, …, T_n` and their exact mean
//! `T = (1/n) Σ T_i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mappings::{GradientStep, Halfspace};
use crate::point::{all_finite, check_dim, Point};

/// Which construction produced a family. Used for reporting and to pick the
/// matching oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    ProjectionMean,
    GradientMean,
    Custom,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::ProjectionMean => "projection-mean",
            FamilyKind::GradientMean => "gradient-mean",
            FamilyKind::Custom => "custom",
        })
    }
}

type CustomFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A user-supplied component. The closure writes `T_i(x)` into its second
/// argument and must be pure.
#[derive(Clone)]
pub struct CustomMap(Arc<CustomFn>);

impl CustomMap {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        CustomMap(Arc::new(f))
    }
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomMap(..)")
    }
}

#[derive(Debug, Clone)]
pub enum Component {
    Projection(Halfspace),
    GradientStep(GradientStep),
    Custom(CustomMap),
}

impl Component {
    #[inline]
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Component::Projection(h) => h.project_into(x, out),
            Component::GradientStep(g) => g.apply_into(x, out),
            Component::Custom(c) => (c.0)(x, out),
        }
    }
}

/// Common interface of anything that behaves like a finite family of
/// mappings on R^d: the base families and their λ-averaged versions.
pub trait FiniteFamily: Send + Sync {
    fn dim(&self) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `T_i(x)` into `out`. `i` is zero-based and must be `< len()`.
    fn apply_into(&self, i: usize, x: &[f64], out: &mut [f64]);

    fn apply_component(&self, i: usize, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.dim())?;
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.len(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        self.apply_into(i, x, &mut out);
        finite_point(out)
    }

    /// `(1/n) Σ_i T_i(x)` summed in ascending `i`.
    fn exact_mean_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.len() {
            self.apply_into(i, x, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += *s;
            }
        }
        let n = self.len() as f64;
        for o in out.iter_mut() {
            *o /= n;
        }
    }

    /// `Σ_i w_i T_i(x)` over the listed `(index, weight)` pairs, in the
    /// order given.
    fn weighted_sum_into(
        &self,
        weights: &[(usize, f64)],
        x: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        out.fill(0.0);
        for &(i, w) in weights {
            self.apply_into(i, x, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += w * *s;
            }
        }
    }

    /// `‖x − T(x)‖` with the exact mean.
    fn residual(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut tx = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        self.exact_mean_into(x, &mut tx, &mut scratch);
        crate::point::dist(x, &tx)
    }
}

/// The exact mean `T(x) = (1/n) Σ T_i(x)`.
pub fn exact_mean_apply<F: FiniteFamily + ?Sized>(family: &F, x: &Point) -> Result<Point> {
    check_dim(family.dim(), x.dim())?;
    let mut out = vec![0.0; family.dim()];
    let mut scratch = vec![0.0; family.dim()];
    family.exact_mean_into(x, &mut out, &mut scratch);
    finite_point(out)
}

fn finite_point(v: Vec<f64>) -> Result<Point> {
    if let Some(index) = v.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(Point::from_vec_unchecked(v))
}

/// `n` component mappings on R^d. Dimension and size are fixed at
/// construction.
#[derive(Debug, Clone)]
pub struct MappingFamily {
    dim: usize,
    kind: FamilyKind,
    components: Vec<Component>,
}

impl MappingFamily {
    pub(crate) fn from_components(
        dim: usize,
        kind: FamilyKind,
        components: Vec<Component>,
    ) -> Self {
        debug_assert!(!components.is_empty());
        MappingFamily {
            dim,
            kind,
            components,
        }
    }

    /// A family of arbitrary user mappings. Nonexpansivity is the caller's
    /// responsibility.
    pub fn custom(dim: usize, maps: Vec<CustomMap>) -> Result<Self> {
        if dim == 0 {
            return Err(crate::error::invalid("dimension", "must be positive"));
        }
        if maps.is_empty() {
            return Err(Error::Empty("mapping family"));
        }
        Ok(MappingFamily {
            dim,
            kind: FamilyKind::Custom,
            components: maps.into_iter().map(Component::Custom).collect(),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn exact_mean(&self, x: &Point) -> Result<Point> {
        exact_mean_apply(self, x)
    }
}

impl FiniteFamily for MappingFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.components.len()
    }

    #[inline]
    fn apply_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.components[i].apply_into(x, out);
    }
}

pub(crate) fn ensure_finite(v: &[f64]) -> bool {
    all_finite(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{make_projection_family, Halfspace};

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn interval_family() -> MappingFamily {
        // P onto (-inf, 0] and onto [1, inf) in R^1
        make_projection_family(&[
            Halfspace::new(p(&[1.0]), 0.0).unwrap(),
            Halfspace::new(p(&[-1.0]), -1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn exact_mean_hand_values() {
        let fam = interval_family();
        assert_eq!(fam.exact_mean(&p(&[0.5])).unwrap().coords(), &[0.5]);
        // P_1(2) = 0 and P_2(2) = 2
        assert_eq!(fam.exact_mean(&p(&[2.0])).unwrap().coords(), &[1.0]);
    }

    #[test]
    fn exact_mean_of_identical_components() {
        let shift = |x: &[f64], out: &mut [f64]| {
            out[0] = 0.5 * x[0] + 0.1;
            out[1] = 0.5 * x[1] - 0.3;
        };
        let fam = MappingFamily::custom(2, vec![CustomMap::new(shift); 3]).unwrap();
        let x = p(&[0.7, -1.9]);
        let t1 = fam.apply_component(0, &x).unwrap();
        let t = fam.exact_mean(&x).unwrap();
        for (a, b) in t.iter().zip(t1.iter()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn exact_mean_dimension_mismatch() {
        let fam = interval_family();
        assert!(matches!(
            fam.exact_mean(&p(&[1.0, 2.0])),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn component_index_checked() {
        let fam = interval_family();
        assert!(matches!(
            fam.apply_component(2, &p(&[0.0])),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn custom_family_validation() {
        assert!(MappingFamily::custom(2, vec![]).is_err());
        assert!(MappingFamily::custom(0, vec![CustomMap::new(|_, _| {})]).is_err());
    }
}
