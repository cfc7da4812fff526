use crate::error::{invalid, Result};
use crate::family::{FiniteFamily, MappingFamily};

/// `T_i^λ = λ Id + (1 − λ) T_i`. Shares Fix(T) with the base family and
/// scales the component variance by `(1 − λ)²`.
#[derive(Debug, Clone)]
pub struct AveragedFamily {
    base: MappingFamily,
    lambda: f64,
}

impl AveragedFamily {
    pub fn base(&self) -> &MappingFamily {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

pub fn make_averaged(base: MappingFamily, lambda: f64) -> Result<AveragedFamily> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid("lambda", format!("{lambda} is outside [0, 1]")));
    }
    Ok(AveragedFamily { base, lambda })
}

impl FiniteFamily for AveragedFamily {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn len(&self) -> usize {
        self.base.len()
    }

    #[inline]
    fn apply_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.base.apply_into(i, x, out);
        let mu = 1.0 - self.lambda;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.lambda * xi + mu * *o;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{exact_mean_apply, CustomMap};
    use crate::mappings::{make_projection_family, Halfspace};
    use crate::point::{dist_sq, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn sample_family() -> MappingFamily {
        make_projection_family(&[
            Halfspace::new(p(&[1.0, 0.0]), 0.0).unwrap(),
            Halfspace::new(p(&[1.0, 1.0]), 0.0).unwrap(),
            Halfspace::new(p(&[-1.0, 2.0]), 1.0).unwrap(),
        ])
        .unwrap()
    }

    /// Population variance `(1/n) Σ ‖T_i(x) − T(x)‖²` by enumeration.
    fn enumerated_variance<F: FiniteFamily>(fam: &F, x: &Point) -> f64 {
        let mean = exact_mean_apply(fam, x).unwrap();
        (0..fam.len())
            .map(|i| dist_sq(&fam.apply_component(i, x).unwrap(), &mean))
            .sum::<f64>()
            / fam.len() as f64
    }

    #[test]
    fn endpoints_and_midpoint() {
        let base = sample_family();
        let x = p(&[2.0, 1.5]);
        let id = make_averaged(base.clone(), 1.0).unwrap();
        let same = make_averaged(base.clone(), 0.0).unwrap();
        for i in 0..base.len() {
            assert_eq!(id.apply_component(i, &x).unwrap(), x);
            assert_eq!(
                same.apply_component(i, &x).unwrap(),
                base.apply_component(i, &x).unwrap()
            );
        }
        let two = MappingFamily::custom(1, vec![CustomMap::new(|_, out| out[0] = 2.0)]).unwrap();
        let half = make_averaged(two, 0.5).unwrap();
        assert_eq!(
            half.apply_component(0, &p(&[0.0])).unwrap().coords(),
            &[1.0]
        );
    }

    #[test]
    fn lambda_out_of_range() {
        assert!(make_averaged(sample_family(), -0.01).is_err());
        assert!(make_averaged(sample_family(), 1.01).is_err());
        assert!(make_averaged(sample_family(), f64::NAN).is_err());
    }

    #[test]
    fn variance_scales_by_one_minus_lambda_squared() {
        let base = sample_family();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &lambda in &[0.0, 0.25, 0.55, 0.75, 0.9] {
            let avg = make_averaged(base.clone(), lambda).unwrap();
            for _ in 0..200 {
                let x = p(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
                let vb = enumerated_variance(&base, &x);
                let va = enumerated_variance(&avg, &x);
                let expected = (1.0 - lambda).powi(2) * vb;
                // points inside every halfspace give a variance at rounding level
                assert!(
                    (va - expected).abs() <= 1e-10 * expected + 1e-24,
                    "{va} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn averaged_mean_shares_fixed_points() {
        let base = sample_family();
        // the origin lies in all three halfspaces
        let star = p(&[0.0, 0.0]);
        let avg = make_averaged(base.clone(), 0.6).unwrap();
        assert!(avg.residual(&star) <= 0.4 * base.residual(&star) + 1e-12);
        let x = p(&[3.0, -1.0]);
        let r_avg = avg.residual(&x);
        let r_base = base.residual(&x);
        assert!((r_avg - 0.4 * r_base).abs() <= 1e-12);
    }
}
