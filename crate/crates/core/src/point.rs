//! Points of R^d and the small amount of vector arithmetic the solvers need.
//!
//! Every reduction runs in ascending index order so results are reproducible
//! bit-for-bit across platforms and thread counts.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A point of R^d with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point"));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Point(vec![0.0; dim])
    }

    /// Wraps a buffer the caller already knows to be finite and non-empty.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.dim())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dist_sq(&self, other: &Point) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dist_sq(&self.0, &other.0))
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

/// `f0(x) = ½‖x − x0‖²`, the objective whose minimizer over Fix(T) is the
/// Halpern limit.
pub fn f0_value(x: &Point, x0: &Point) -> Result<f64> {
    Ok(0.5 * x.dist_sq(x0)?)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        let d = x - y;
        acc + d * d
    })
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|c| c.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn f0_examples() {
        assert_eq!(f0_value(&p(&[1.0, -2.0]), &p(&[1.0, -2.0])).unwrap(), 0.0);
        assert_eq!(f0_value(&p(&[3.0, 4.0]), &p(&[0.0, 0.0])).unwrap(), 12.5);
        assert_eq!(f0_value(&p(&[1.0, 2.0]), &p(&[1.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn f0_dimension_mismatch() {
        let err = f0_value(&p(&[1.0]), &p(&[1.0, 2.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(
            Point::new(vec![0.0, f64::NAN]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert_eq!(Point::new(vec![]).unwrap_err(), Error::Empty("point"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn f0_convex_along_segments(
                x in proptest::collection::vec(-10.0f64..10.0, 3),
                y in proptest::collection::vec(-10.0f64..10.0, 3),
                x0 in proptest::collection::vec(-10.0f64..10.0, 3),
            ) {
                let (x, y, x0) = (p(&x), p(&y), p(&x0));
                let mid = p(&x.iter().zip(y.iter()).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>());
                let lhs = f0_value(&mid, &x0).unwrap();
                let rhs = 0.5 * (f0_value(&x, &x0).unwrap() + f0_value(&y, &x0).unwrap());
                prop_assert!(lhs <= rhs + 1e-12);
            }
        }
    }
}
