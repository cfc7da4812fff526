use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::family::FiniteFamily;
use crate::point::{check_dim, dist, dist_sq, Point};

pub const DEFAULT_PROBE_COUNT: usize = 256;

/// `(1/n) Σ_i ‖T_i(x) − T(x)‖²` by enumerating the components.
pub fn component_variance<F: FiniteFamily + ?Sized>(family: &F, x: &[f64]) -> f64 {
    let d = family.dim();
    let mut mean = vec![0.0; d];
    let mut ti = vec![0.0; d];
    family.exact_mean_into(x, &mut mean, &mut ti);
    let total: f64 = (0..family.len())
        .map(|i| {
            family.apply_into(i, x, &mut ti);
            dist_sq(&ti, &mean)
        })
        .sum();
    total / family.len() as f64
}

/// Largest component variance over the probes, a local stand-in for the
/// variance bound `σ²`.
pub fn estimate_sigma_sq<F: FiniteFamily + ?Sized>(family: &F, probes: &[Point]) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Empty("probe list"));
    }
    let mut best = 0.0f64;
    for p in probes {
        check_dim(family.dim(), p.dim())?;
        best = best.max(component_variance(family, p));
    }
    Ok(best)
}

/// `count` points uniform in the ball around `x_star` of radius
/// `2‖x0 − x_star‖`, followed by `x0` and `x_star` themselves.
pub fn sigma_probes(x_star: &Point, x0: &Point, count: usize, seed: u64) -> Result<Vec<Point>> {
    check_dim(x_star.dim(), x0.dim())?;
    let d = x_star.dim();
    let r = 2.0 * dist(x0, x_star);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(count + 2);
    if r > 0.0 {
        for _ in 0..count {
            let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let len = crate::point::norm(&dir);
            if len == 0.0 {
                continue;
            }
            let rad = r * rng.random::<f64>().powf(1.0 / d as f64) / len;
            for (v, c) in dir.iter_mut().zip(x_star.iter()) {
                *v = c + rad * *v;
            }
            probes.push(Point::new(dir)?);
        }
    }
    probes.push(x0.clone());
    probes.push(x_star.clone());
    Ok(probes)
}
