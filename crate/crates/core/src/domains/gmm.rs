//! Two-dimensional Gaussian-mixture toy: the target `p` has modes at (1,1)
//! and (3,1); the behaviour distribution `q` adds a third mode at (2,2) and
//! uses wider components.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::BoxBounds;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    pub p_means: Vec<[f64; 2]>,
    pub q_means: Vec<[f64; 2]>,
    pub p_variance: f64,
    pub q_variance: f64,
}

impl Default for GmmSpec {
    fn default() -> Self {
        Self {
            p_means: vec![[1.0, 1.0], [3.0, 1.0]],
            q_means: vec![[1.0, 1.0], [3.0, 1.0], [2.0, 2.0]],
            p_variance: 0.05,
            q_variance: 0.1,
        }
    }
}

fn isotropic(point: [f64; 2], mean: [f64; 2], var: f64) -> f64 {
    let d2 = (point[0] - mean[0]).powi(2) + (point[1] - mean[1]).powi(2);
    (-d2 / (2.0 * var)).exp() / (2.0 * PI * var)
}

fn mixture(point: [f64; 2], means: &[[f64; 2]], var: f64) -> f64 {
    means.iter().map(|&m| isotropic(point, m, var)).sum::<f64>() / means.len() as f64
}

fn draw<R: Rng + ?Sized>(means: &[[f64; 2]], var: f64, rng: &mut R) -> [f64; 2] {
    let m = means[rng.random_range(0..means.len())];
    let sd = var.sqrt();
    let zx: f64 = rng.sample(StandardNormal);
    let zy: f64 = rng.sample(StandardNormal);
    [m[0] + sd * zx, m[1] + sd * zy]
}

impl GmmSpec {
    pub fn density_p(&self, point: [f64; 2]) -> f64 {
        mixture(point, &self.p_means, self.p_variance)
    }

    pub fn density_q(&self, point: [f64; 2]) -> f64 {
        mixture(point, &self.q_means, self.q_variance)
    }

    /// Exact ratio `p/q`.
    pub fn ratio(&self, point: [f64; 2]) -> f64 {
        self.density_p(point) / self.density_q(point)
    }

    pub fn sample_p<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        draw(&self.p_means, self.p_variance, rng)
    }

    pub fn sample_q<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        draw(&self.q_means, self.q_variance, rng)
    }

    /// Box that holds all but a negligible tail of both mixtures.
    pub fn sample_box(&self) -> BoxBounds {
        BoxBounds::new(vec![-0.5, -0.5], vec![4.5, 3.5]).expect("static bounds are valid")
    }
}

/// Probability mass of an isotropic Gaussian inside a disc of `radius`
/// around its own mean.
pub fn centered_disc_mass(variance: f64, radius: f64) -> f64 {
    1.0 - (-radius * radius / (2.0 * variance)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gap_mode_is_off_target() {
        let g = GmmSpec::default();
        assert!(g.density_p([2.0, 2.0]) < 0.05 * g.density_q([2.0, 2.0]));
        assert_eq!(g.density_p([1.0, 1.0]), g.density_p([3.0, 1.0]));
    }

    #[test]
    fn densities_integrate_to_one() {
        let g = GmmSpec::default();
        let (n, lo_x, hi_x, lo_y, hi_y) = (600, -2.0, 6.0, -2.0, 5.0);
        let (dx, dy) = ((hi_x - lo_x) / n as f64, (hi_y - lo_y) / n as f64);
        let mut ip = 0.0;
        let mut iq = 0.0;
        for i in 0..n {
            for j in 0..n {
                let pt = [lo_x + (i as f64 + 0.5) * dx, lo_y + (j as f64 + 0.5) * dy];
                ip += g.density_p(pt) * dx * dy;
                iq += g.density_q(pt) * dx * dy;
            }
        }
        assert!((ip - 1.0).abs() < 1e-3 && (iq - 1.0).abs() < 1e-3, "{ip} {iq}");
    }

    #[test]
    fn sample_mean_of_p() {
        let g = GmmSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let p = g.sample_p(&mut rng);
            sx += p[0];
            sy += p[1];
        }
        assert!((sx / n as f64 - 2.0).abs() < 0.02);
        assert!((sy / n as f64 - 1.0).abs() < 0.02);
    }
}
