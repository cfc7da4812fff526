use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::family::{Component, FamilyKind, MappingFamily};
use crate::point::check_dim;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// A least-squares term `f(x) = ½‖A x − b‖²` with `A ∈ R^{m×d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTerm {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl QuadraticTerm {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Empty("quadratic term matrix"));
        }
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("quadratic term", "entries must be finite"));
        }
        Ok(QuadraticTerm { a, b })
    }

    /// Builds a term from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>], b: Vec<f64>) -> Result<Self> {
        let m = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if m == 0 || d == 0 {
            return Err(Error::Empty("quadratic term matrix"));
        }
        for r in rows {
            check_dim(d, r.len())?;
        }
        let a = DMatrix::from_fn(m, d, |i, j| rows[i][j]);
        QuadraticTerm::new(a, DVector::from_vec(b))
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.a.transpose() * &self.a
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = &self.a * DVector::from_column_slice(x) - &self.b;
        0.5 * r.norm_squared()
    }

    /// Smallest singular value of `A` (zero when `m < d`).
    pub fn smallest_singular_value(&self) -> f64 {
        if self.a.nrows() < self.a.ncols() {
            return 0.0;
        }
        self.a
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// One gradient-step component `x ↦ x − η (G x − c)` with `G = AᵀA`,
/// `c = Aᵀb`.
#[derive(Debug, Clone)]
pub struct GradientStep {
    dim: usize,
    eta: f64,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    lipschitz: f64,
}

impl GradientStep {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Largest eigenvalue of `AᵀA`, the Lipschitz constant of `∇f`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.gram[i * d..(i + 1) * d];
            let g = row.iter().zip(x).fold(0.0, |acc, (r, xj)| acc + r * xj) - self.rhs[i];
            *o = x[i] - self.eta * g;
        }
    }
}

/// Step size for the gradient family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    /// `η = 1/L_max`, with `L_max` estimated by power iteration started from
    /// a vector drawn with `seed`.
    Auto {
        seed: u64,
    },
    Fixed(f64),
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with a Rayleigh-quotient stopping rule.
pub fn largest_eigenvalue(m: &DMatrix<f64>, seed: u64) -> f64 {
    let d = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n == 0.0 {
        v = DVector::from_element(d, 1.0);
    }
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = m * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / wn;
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// `T_i = Id − η ∇f_i`; Fix(T) is the set of minimizers of `(1/n) Σ f_i`.
pub fn make_gradient_family(terms: &[QuadraticTerm], eta: Eta) -> Result<MappingFamily> {
    let first = terms.first().ok_or(Error::Empty("quadratic term list"))?;
    let dim = first.dim();
    for t in terms {
        check_dim(dim, t.dim())?;
    }
    let seed = match eta {
        Eta::Auto { seed } => seed,
        Eta::Fixed(_) => 0,
    };
    let grams: Vec<DMatrix<f64>> = terms.iter().map(QuadraticTerm::gram).collect();
    let lipschitz: Vec<f64> = grams
        .iter()
        .enumerate()
        .map(|(i, g)| largest_eigenvalue(g, seed.wrapping_add(i as u64)))
        .collect();
    let l_max = lipschitz.iter().copied().fold(0.0, f64::max);
    let eta = match eta {
        Eta::Auto { .. } => {
            if l_max > 0.0 {
                1.0 / l_max
            } else {
                1.0
            }
        }
        Eta::Fixed(e) => {
            if !(e.is_finite() && e >= 0.0) {
                return Err(invalid("eta", "must be a finite nonnegative number"));
            }
            if l_max > 0.0 && e > 2.0 / l_max {
                return Err(Error::NonexpansivityViolated {
                    eta: e,
                    limit: 2.0 / l_max,
                });
            }
            e
        }
    };
    let components = terms
        .iter()
        .zip(grams)
        .zip(lipschitz)
        .map(|((t, g), l)| {
            let c = t.a.transpose() * &t.b;
            // row-major copy of the symmetric Gram matrix
            let gram = (0..dim)
                .flat_map(|i| (0..dim).map(move |j| (i, j)))
                .map(|(i, j)| g[(i, j)])
                .collect();
            Component::GradientStep(GradientStep {
                dim,
                eta,
                gram,
                rhs: c.iter().copied().collect(),
                lipschitz: l,
            })
        })
        .collect();
    Ok(MappingFamily::from_components(
        dim,
        FamilyKind::GradientMean,
        components,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FiniteFamily;
    use crate::point::Point;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn identity_term(b: &[f64]) -> QuadraticTerm {
        let d = b.len();
        QuadraticTerm::new(DMatrix::identity(d, d), DVector::from_column_slice(b)).unwrap()
    }

    #[test]
    fn unit_step_on_scalar_term_maps_to_zero() {
        let fam = make_gradient_family(&[identity_term(&[0.0])], Eta::Fixed(1.0)).unwrap();
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(fam.exact_mean(&p(&[x])).unwrap().coords(), &[0.0]);
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let fam = make_gradient_family(&[identity_term(&[1.0, -2.0])], Eta::Fixed(0.0)).unwrap();
        let x = p(&[0.3, 7.0]);
        assert_eq!(fam.exact_mean(&x).unwrap(), x);
    }

    #[test]
    fn two_terms_average_to_midpoint() {
        let fam = make_gradient_family(
            &[identity_term(&[1.0, 0.0]), identity_term(&[0.0, 1.0])],
            Eta::Fixed(1.0),
        )
        .unwrap();
        for x in [[0.0, 0.0], [4.0, -1.0], [0.5, 0.5]] {
            assert_eq!(fam.exact_mean(&p(&x)).unwrap().coords(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn explicit_eta_above_two_over_l_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let t = QuadraticTerm::new(a, DVector::from_vec(vec![0.0, 0.0])).unwrap();
        // L = 4, so 2/L = 0.5
        assert!(make_gradient_family(std::slice::from_ref(&t), Eta::Fixed(0.5)).is_ok());
        assert!(matches!(
            make_gradient_family(&[t], Eta::Fixed(0.51)),
            Err(Error::NonexpansivityViolated { .. })
        ));
    }

    #[test]
    fn power_iteration_matches_symmetric_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = DMatrix::from_fn(6, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let g = a.transpose() * &a;
            let exact = g.clone().symmetric_eigen().eigenvalues.max();
            let est = largest_eigenvalue(&g, 11);
            assert!((est - exact).abs() <= 1e-8 * exact, "{est} vs {exact}");
        }
    }

    #[test]
    fn auto_eta_is_inverse_max_lipschitz() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let t1 = QuadraticTerm::new(a, DVector::zeros(2)).unwrap();
        let t2 = identity_term(&[1.0, 1.0]);
        let fam = make_gradient_family(&[t1, t2], Eta::Auto { seed: 1 }).unwrap();
        match &fam.components()[0] {
            Component::GradientStep(g) => assert!((g.eta() - 1.0 / 9.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn auto_eta_components_are_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let terms: Vec<QuadraticTerm> = (0..5)
            .map(|_| {
                let a = DMatrix::from_fn(3, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
                let b = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
                QuadraticTerm::new(a, b).unwrap()
            })
            .collect();
        let fam = make_gradient_family(&terms, Eta::Auto { seed: 5 }).unwrap();
        for i in 0..fam.len() {
            for _ in 0..1000 {
                let x = p(&(0..4)
                    .map(|_| rng.random_range(-10.0..10.0))
                    .collect::<Vec<_>>());
                let y = p(&(0..4)
                    .map(|_| rng.random_range(-10.0..10.0))
                    .collect::<Vec<_>>());
                let tx = fam.apply_component(i, &x).unwrap();
                let ty = fam.apply_component(i, &y).unwrap();
                assert!(tx.dist_sq(&ty).unwrap().sqrt() <= x.dist_sq(&y).unwrap().sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn singular_value_detects_rank_deficiency() {
        let t =
            QuadraticTerm::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], vec![0.0, 0.0]).unwrap();
        assert!(t.smallest_singular_value() < 1e-10);
        let wide = QuadraticTerm::from_rows(&[vec![1.0, 0.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(wide.smallest_singular_value(), 0.0);
        assert!(identity_term(&[1.0, 2.0]).smallest_singular_value() > 0.99);
    }
}
