use crate::error::{invalid, Error, Result};
use crate::family::{Component, FamilyKind, MappingFamily};
use crate::point::{check_dim, dot, norm_sq, Point};

/// The closed halfspace `{x : ⟨a, x⟩ ≤ β}` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
    normal_sq: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let normal_sq = norm_sq(&normal);
        if normal_sq == 0.0 {
            return Err(invalid("halfspace.normal", "normal vector must be nonzero"));
        }
        if !offset.is_finite() {
            return Err(invalid("halfspace.offset", "offset must be finite"));
        }
        Ok(Halfspace {
            normal,
            offset,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `⟨a, x⟩ − β`; positive outside the halfspace.
    pub fn violation(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    #[inline]
    pub(crate) fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let v = self.violation(x);
        if v > 0.0 {
            let t = v / self.normal_sq;
            for ((o, xi), ai) in out.iter_mut().zip(x).zip(self.normal.iter()) {
                *o = xi - t * ai;
            }
        } else {
            out.copy_from_slice(x);
        }
    }
}

/// Metric projection `x − max(0, ⟨a,x⟩−β)/‖a‖² · a`.
pub fn project_halfspace(h: &Halfspace, x: &Point) -> Result<Point> {
    check_dim(h.dim(), x.dim())?;
    let mut out = vec![0.0; x.dim()];
    h.project_into(x, &mut out);
    Point::new(out)
}

/// `T = (1/n) Σ P_i`; when the halfspaces intersect, Fix(T) is their
/// intersection.
pub fn make_projection_family(halfspaces: &[Halfspace]) -> Result<MappingFamily> {
    let first = halfspaces.first().ok_or(Error::Empty("halfspace list"))?;
    let dim = first.dim();
    for h in halfspaces {
        check_dim(dim, h.dim())?;
    }
    Ok(MappingFamily::from_components(
        dim,
        FamilyKind::ProjectionMean,
        halfspaces
            .iter()
            .cloned()
            .map(Component::Projection)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FiniteFamily;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn h(a: &[f64], beta: f64) -> Halfspace {
        Halfspace::new(p(a), beta).unwrap()
    }

    #[test]
    fn projection_examples() {
        let e1 = h(&[1.0, 0.0], 0.0);
        assert_eq!(
            project_halfspace(&e1, &p(&[2.0, 3.0])).unwrap().coords(),
            &[0.0, 3.0]
        );
        assert_eq!(
            project_halfspace(&e1, &p(&[-1.0, 5.0])).unwrap().coords(),
            &[-1.0, 5.0]
        );
        let diag = h(&[1.0, 1.0], 0.0);
        assert_eq!(
            project_halfspace(&diag, &p(&[1.0, 1.0])).unwrap().coords(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(Halfspace::new(p(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn family_examples() {
        let single = make_projection_family(&[h(&[1.0, 0.0], 0.0)]).unwrap();
        assert_eq!(
            single.exact_mean(&p(&[3.0, 1.0])).unwrap().coords(),
            &[0.0, 1.0]
        );

        let fam = make_projection_family(&[h(&[1.0, 0.0], 0.0), h(&[0.0, 1.0], 0.0)]).unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(
            fam.exact_mean(&p(&[1.0, 1.0])).unwrap().coords(),
            &[0.5, 0.5]
        );
        let inside = p(&[-0.3, -2.0]);
        assert_eq!(fam.exact_mean(&inside).unwrap(), inside);
    }

    #[test]
    fn family_errors() {
        assert!(matches!(make_projection_family(&[]), Err(Error::Empty(_))));
        assert!(matches!(
            make_projection_family(&[h(&[1.0], 0.0), h(&[1.0, 0.0], 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn arb_halfspace() -> impl Strategy<Value = Halfspace> {
        (proptest::collection::vec(-3.0f64..3.0, 3), -2.0f64..2.0)
            .prop_filter("nonzero normal", |(a, _)| norm_sq(a) > 1e-3)
            .prop_map(|(a, b)| h(&a, b))
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(hs in arb_halfspace(), x in proptest::collection::vec(-10.0f64..10.0, 3)) {
            let once = project_halfspace(&hs, &p(&x)).unwrap();
            let twice = project_halfspace(&hs, &once).unwrap();
            for (a, b) in once.iter().zip(twice.iter()) {
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
            }
            prop_assert!(hs.contains(&once, 1e-12));
        }

        #[test]
        fn projection_is_firmly_nonexpansive(
            hs in arb_halfspace(),
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            y in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let (x, y) = (p(&x), p(&y));
            let px = project_halfspace(&hs, &x).unwrap();
            let py = project_halfspace(&hs, &y).unwrap();
            let diff: Vec<f64> = px.iter().zip(py.iter()).map(|(a, b)| a - b).collect();
            let xy: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
            prop_assert!(norm_sq(&diff) <= dot(&diff, &xy) + 1e-12);
        }
    }
}
