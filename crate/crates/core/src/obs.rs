//! Location-scale observation models.
//!
//! Data are modelled as `y_j = η_j + σ ε_j` with `ε_j` i.i.d. from a symmetric,
//! unit-variance density ρ. Only the Gaussian ρ ships built in; other kinds
//! plug in through [`StandardDensity`].

use std::fmt;
use std::sync::Arc;

use crate::error::{contract, Error, Result};
use crate::special::LN_SQRT_2PI;

/// A symmetric Lebesgue density on ℝ with unit variance.
pub trait StandardDensity: Send + Sync {
    fn name(&self) -> &str;
    fn ln_pdf(&self, x: f64) -> f64;

    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl StandardDensity for Gaussian {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        -0.5 * x * x - LN_SQRT_2PI
    }
}

/// Looks up a built-in density by name.
pub fn density_by_name(name: &str) -> Result<Arc<dyn StandardDensity>> {
    match name {
        "gaussian" => Ok(Arc::new(Gaussian)),
        other => Err(Error::Config(format!("unknown observation density `{other}`"))),
    }
}

#[derive(Clone)]
pub struct LocationScaleModel {
    rho: Arc<dyn StandardDensity>,
    sigma: f64,
    m: usize,
}

impl fmt::Debug for LocationScaleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocationScaleModel")
            .field("rho", &self.rho.name())
            .field("sigma", &self.sigma)
            .field("m", &self.m)
            .finish()
    }
}

impl LocationScaleModel {
    pub fn new(rho: Arc<dyn StandardDensity>, sigma: f64, m: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(contract(format!("sigma must be positive, got {sigma}")));
        }
        if m == 0 {
            return Err(contract("observation count must be at least 1"));
        }
        let rho0 = rho.pdf(0.0);
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(contract(format!("rho(0) must be finite and positive, got {rho0}")));
        }
        Ok(Self { rho, sigma, m })
    }

    pub fn gaussian(sigma: f64, m: usize) -> Result<Self> {
        Self::new(Arc::new(Gaussian), sigma, m)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> &dyn StandardDensity {
        self.rho.as_ref()
    }

    /// ρ(0), the standardized density at the origin. Independent of σ.
    pub fn rho_at_zero(&self) -> f64 {
        self.rho.pdf(0.0)
    }

    /// `Σ_j [−ln σ + ln ρ((y_j − η_j)/σ)]`.
    pub fn log_likelihood<P>(&self, data: &DataSet<P>, eta: &[f64]) -> Result<f64> {
        if eta.len() != self.m || data.y.len() != self.m {
            return Err(contract(format!(
                "expected {} observations, got eta of length {} and data of length {}",
                self.m,
                eta.len(),
                data.y.len()
            )));
        }
        if let Some(j) = eta.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!("eta[{j}] = {}", eta[j])));
        }
        let ln_sigma = self.sigma.ln();
        Ok(data
            .y
            .iter()
            .zip(eta)
            .map(|(y, e)| self.rho.ln_pdf((y - e) / self.sigma) - ln_sigma)
            .sum())
    }

    /// Closed form of `M(η) = Σ_i ∫ |∂φ_y/∂η_i| f_o(y|η) dy` for a location-scale
    /// family: `2 m ρ(0) / σ`, independent of η.
    pub fn m_integral(&self) -> f64 {
        2.0 * self.m as f64 * self.rho_at_zero() / self.sigma
    }
}

/// Observations together with the location each was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet<P = f64> {
    pub y: Vec<f64>,
    pub design: Vec<P>,
}

impl<P> DataSet<P> {
    pub fn new(y: Vec<f64>, design: Vec<P>) -> Result<Self> {
        if y.len() != design.len() {
            return Err(contract(format!(
                "data length {} differs from design length {}",
                y.len(),
                design.len()
            )));
        }
        if y.is_empty() {
            return Err(contract("data set is empty"));
        }
        Ok(Self { y, design })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `√(2/π)·m/σ`, the M-integral for independent Gaussian errors.
pub fn m_integral_gaussian(sigma: f64, m: usize) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * m as f64 / sigma
}
