use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sample_truncated_normal;

/// Zero-mean Gaussian Markov random field on `size` nodal values, box-truncated
/// to `[0, upper]` per coordinate.
///
/// The precision is `δ·DᵀD` with `D` the interior second-difference operator
/// (free boundary), so `bᵀQb = δ Σ_i (b_{i−1} − 2b_i + b_{i+1})²`. Constants and
/// linear trends are unpenalized; the box makes the prior proper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmrfPrior {
    pub size: usize,
    pub precision: f64,
    pub upper: f64,
}

impl GmrfPrior {
    pub fn new(size: usize, precision: f64, upper: f64) -> Result<Self> {
        let prior = Self { size, precision, upper };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(Error::Config("GMRF needs at least 3 nodes".into()));
        }
        if !(self.precision > 0.0 && self.upper > 0.0) {
            return Err(Error::Config("GMRF precision and support bound must be positive".into()));
        }
        Ok(())
    }

    /// `δ Σ (second differences)²`.
    pub fn quad_form(&self, b: &[f64]) -> f64 {
        self.precision
            * b.windows(3)
                .map(|w| {
                    let d = w[0] - 2.0 * w[1] + w[2];
                    d * d
                })
                .sum::<f64>()
    }

    pub fn in_support(&self, b: &[f64]) -> bool {
        b.len() == self.size && b.iter().all(|&v| (0.0..=self.upper).contains(&v))
    }

    /// Unnormalized log density; `−∞` outside the box.
    pub fn ln_density(&self, b: &[f64]) -> f64 {
        if !self.in_support(b) {
            return f64::NEG_INFINITY;
        }
        -0.5 * self.quad_form(b)
    }

    pub fn precision_matrix(&self) -> DMatrix<f64> {
        let n = self.size;
        let mut q = DMatrix::zeros(n, n);
        for r in 0..n - 2 {
            let stencil = [(r, 1.0), (r + 1, -2.0), (r + 2, 1.0)];
            for &(i, di) in &stencil {
                for &(j, dj) in &stencil {
                    q[(i, j)] += self.precision * di * dj;
                }
            }
        }
        q
    }

    /// Approximate draw by `sweeps` systematic Gibbs sweeps of truncated
    /// normal full conditionals, started from a uniform point in the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, sweeps: usize) -> Vec<f64> {
        let q = self.precision_matrix();
        let n = self.size;
        let mut b: Vec<f64> = (0..n).map(|_| self.upper * rng.random::<f64>()).collect();
        for _ in 0..sweeps {
            for i in 0..n {
                let qii = q[(i, i)];
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(n - 1);
                let off: f64 = (lo..=hi).filter(|&j| j != i).map(|j| q[(i, j)] * b[j]).sum();
                let mean = -off / qii;
                let sd = 1.0 / qii.sqrt();
                b[i] = sample_truncated_normal(rng, mean, sd, 0.0, self.upper);
            }
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_form_matches_dense_matrix() {
        let g = GmrfPrior::new(21, 30.0, 10f64.ln()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let mut b: Vec<f64> = (0..21).map(|_| rng.random::<f64>() * 2.0).collect();
            b[7] = 1.0;
            let v = DVector::from_vec(b.clone());
            let dense = (v.transpose() * g.precision_matrix() * &v)[(0, 0)];
            assert!((dense - g.quad_form(&b)).abs() < 1e-10 * dense.max(1.0));
        }
    }

    #[test]
    fn precision_is_symmetric_psd_with_linear_null_space() {
        let g = GmrfPrior::new(8, 2.0, 1.0).unwrap();
        let q = g.precision_matrix();
        assert_eq!(q, q.transpose());
        let eig = q.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        let linear: Vec<f64> = (0..8).map(|i| 0.3 + 0.1 * i as f64).collect();
        assert!(g.quad_form(&linear).abs() < 1e-24);
    }

    #[test]
    fn samples_stay_in_box() {
        let g = GmrfPrior::new(21, 30.0, 10f64.ln()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let b = g.sample(&mut rng, 50);
            assert!(g.in_support(&b));
            assert!(g.ln_density(&b).is_finite());
        }
        assert_eq!(g.ln_density(&[0.5; 20]), f64::NEG_INFINITY);
        assert_eq!(g.ln_density(&[-0.1; 21]), f64::NEG_INFINITY);
    }
}
