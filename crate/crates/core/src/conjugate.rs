//! Exact evidences for Gaussian linear models `y = X β + ε`, `ε ~ N(0, σ²I)`,
//! with conjugate prior `β ~ N(μ₀, σ² A₀⁻¹)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{contract, Error, Result};
use crate::priors::{Basis, DimPrior};
use crate::special::log_sum_exp;

const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub x: DMatrix<f64>,
    pub mu0: DVector<f64>,
    pub a0: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Spectral condition number of `XᵀX + A₀`.
    pub condition: f64,
}

struct Factored {
    chol: Cholesky<f64, Dyn>,
    rhs: DVector<f64>,
    condition: f64,
}

impl LinearModel {
    pub fn new(x: DMatrix<f64>, mu0: DVector<f64>, a0: DMatrix<f64>) -> Result<Self> {
        let k = x.ncols();
        if mu0.len() != k || a0.nrows() != k || a0.ncols() != k {
            return Err(contract("prior mean and precision must match the design columns"));
        }
        if (&a0 - a0.transpose()).amax() > 1e-12 * a0.amax().max(1.0) {
            return Err(contract("prior precision must be symmetric"));
        }
        if k > 0 && Cholesky::new(a0.clone()).is_none() {
            return Err(contract("prior precision must be positive definite"));
        }
        Ok(Self { x, mu0, a0 })
    }

    /// First `kappa` wave modes at `design`, prior `N(0, σ²/τ · I)`.
    pub fn wave(design: &[f64], kappa: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(contract("prior precision factor must be positive"));
        }
        let x = DMatrix::from_fn(design.len(), kappa, |j, n| Basis::WaveSine.eval(n, design[j]));
        Self::new(x, DVector::zeros(kappa), DMatrix::identity(kappa, kappa) * tau)
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn factor(&self, y: &[f64]) -> Result<Factored> {
        if y.len() != self.x.nrows() {
            return Err(contract(format!(
                "expected {} observations, got {}",
                self.x.nrows(),
                y.len()
            )));
        }
        let yv = DVector::from_column_slice(y);
        let p = self.x.transpose() * &self.x + &self.a0;
        let eig = SymmetricEigen::new(p.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        let chol = Cholesky::new(p).ok_or(Error::Singular { condition })?;
        let rhs = &self.a0 * &self.mu0 + self.x.transpose() * yv;
        Ok(Factored {
            chol,
            rhs,
            condition,
        })
    }
}

/// Mean `(XᵀX+A₀)⁻¹(A₀μ₀+Xᵀy)` and covariance `σ²(XᵀX+A₀)⁻¹`.
pub fn conjugate_posterior(model: &LinearModel, y: &[f64], sigma: f64) -> Result<GaussianPosterior> {
    if !(sigma > 0.0) {
        return Err(contract("sigma must be positive"));
    }
    if model.dim() == 0 {
        return Ok(GaussianPosterior {
            mean: DVector::zeros(0),
            covariance: DMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    let f = model.factor(y)?;
    Ok(GaussianPosterior {
        mean: f.chol.solve(&f.rhs),
        covariance: f.chol.inverse() * (sigma * sigma),
        condition: f.condition,
    })
}

/// Log marginal likelihood
/// `−(m/2)ln(2πσ²) + ½ln|A₀| − ½ln|P| − (yᵀy + μ₀ᵀA₀μ₀ − bᵀP⁻¹b)/(2σ²)`
/// with `P = XᵀX + A₀` and `b = A₀μ₀ + Xᵀy`.
pub fn log_evidence(model: &LinearModel, y: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(contract("sigma must be positive"));
    }
    let m = y.len() as f64;
    let s2 = sigma * sigma;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let shared = -0.5 * m * (2.0 * std::f64::consts::PI * s2).ln();
    if model.dim() == 0 {
        if y.len() != model.x.nrows() {
            return Err(contract("observation count does not match the design"));
        }
        return Ok(shared - 0.5 * yy / s2);
    }
    let f = model.factor(y)?;
    let ln_det_p = 2.0 * f.chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let a0_chol = Cholesky::new(model.a0.clone()).ok_or(Error::Singular { condition: f64::INFINITY })?;
    let ln_det_a0 = 2.0 * a0_chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad_prior = model.mu0.dot(&(&model.a0 * &model.mu0));
    let quad_post = f.rhs.dot(&f.chol.solve(&f.rhs));
    let v = shared + 0.5 * ln_det_a0 - 0.5 * ln_det_p - 0.5 * (yy + quad_prior - quad_post) / s2;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("log evidence is {v}")));
    }
    Ok(v)
}

/// `ln Z_κ` for κ = 0..=k_max wave modes.
pub fn wave_log_evidences(design: &[f64], y: &[f64], sigma: f64, tau: f64, k_max: usize) -> Result<Vec<f64>> {
    (0..=k_max)
        .map(|k| log_evidence(&LinearModel::wave(design, k, tau)?, y, sigma))
        .collect()
}

/// `P(κ = i | y) ∝ h(i) Z_i` on `i ≤ k_cut`.
pub fn kappa_marginal(log_evidences: &[f64], dim_prior: &DimPrior, k_cut: usize) -> Result<Vec<f64>> {
    if log_evidences.len() <= k_cut {
        return Err(contract(format!("need evidences up to {k_cut}")));
    }
    if log_evidences.iter().any(|v| !v.is_finite()) {
        return Err(contract("evidences must be finite"));
    }
    let logw: Vec<f64> = (0..=k_cut).map(|i| dim_prior.ln_pmf(i) + log_evidences[i]).collect();
    let norm = log_sum_exp(&logw);
    if !norm.is_finite() {
        return Err(Error::Degenerate("all dimension weights vanish".into()));
    }
    Ok(logw.iter().map(|w| (w - norm).exp()).collect())
}

/// `½|Z_small/Z_big − 1|` for h-weighted evidence sums truncated at the two cutoffs.
pub fn wave_abf(log_evidences: &[f64], dim_prior: &DimPrior, k_small: usize, k_big: usize) -> Result<f64> {
    if k_small > k_big || log_evidences.len() <= k_big {
        return Err(contract("need k_small <= k_big and evidences up to k_big"));
    }
    let logw: Vec<f64> = (0..=k_big).map(|i| dim_prior.ln_pmf(i) + log_evidences[i]).collect();
    let z_big = log_sum_exp(&logw);
    if !z_big.is_finite() {
        return Err(contract("total evidence must be positive and finite"));
    }
    if k_small == k_big {
        return Ok(0.0);
    }
    // Z_big − Z_small is the mass above k_small; taking it directly avoids
    // cancellation when the ratio is within rounding of 1.
    Ok(0.5 * (log_sum_exp(&logw[k_small + 1..]) - z_big).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_information_returns_prior() {
        let model = LinearModel::new(
            DMatrix::zeros(3, 2),
            DVector::from_vec(vec![1.0, -1.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let post = conjugate_posterior(&model, &[0.3, 0.1, 0.2], 0.5).unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-14 && (post.mean[1] + 1.0).abs() < 1e-14);
        let prior_cov = model.a0.clone().try_inverse().unwrap() * 0.25;
        assert!((post.covariance - prior_cov).amax() < 1e-14);
    }

    #[test]
    fn empty_model_has_no_quadratic_term() {
        let model = LinearModel::wave(&[0.2, 0.4], 0, 1.0).unwrap();
        let z = log_evidence(&model, &[0.0, 0.0], 1.0).unwrap();
        assert!((z + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn singular_system_reports_condition() {
        let model = LinearModel::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            DVector::zeros(2),
            DMatrix::identity(2, 2) * 1e-17,
        )
        .unwrap();
        assert!(matches!(conjugate_posterior(&model, &[1.0, 1.0], 1.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn equal_cutoffs_give_zero_abf() {
        let h = DimPrior::Poisson { lambda: 10.0 };
        let ev = vec![-3.0; 21];
        assert_eq!(wave_abf(&ev, &h, 20, 20).unwrap(), 0.0);
        let p = kappa_marginal(&ev, &DimPrior::Table { pmf: vec![0.25; 4] }, 3).unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }
}
