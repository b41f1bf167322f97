use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{contract, Error, Result};

/// Prior `h(κ)` on the number of series terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DimPrior {
    /// Poisson(λ) on {0, 1, 2, …}.
    Poisson { lambda: f64 },
    /// Poisson(λ) restricted to odd κ and renormalized.
    OddPoisson { lambda: f64 },
    /// All mass at `k`.
    Point { k: usize },
    /// Explicit pmf on {0, …, len − 1}.
    Table { pmf: Vec<f64> },
}

impl DimPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            DimPrior::Poisson { lambda } | DimPrior::OddPoisson { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::Config(format!("Poisson mean must be positive, got {lambda}")));
                }
            }
            DimPrior::Point { .. } => {}
            DimPrior::Table { pmf } => {
                if pmf.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                    return Err(Error::Config("dimension pmf has a negative or non-finite entry".into()));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("dimension pmf sums to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    fn poisson_pmf(lambda: f64, i: usize) -> f64 {
        let i = i as f64;
        (-lambda + i * lambda.ln() - ln_gamma(i + 1.0)).exp()
    }

    fn odd_normalizer(lambda: f64) -> f64 {
        // P(X odd) for X ~ Po(λ)
        -0.5 * (-2.0 * lambda).exp_m1()
    }

    pub fn pmf(&self, k: usize) -> f64 {
        match self {
            DimPrior::Poisson { lambda } => Self::poisson_pmf(*lambda, k),
            DimPrior::OddPoisson { lambda } => {
                if k % 2 == 1 {
                    Self::poisson_pmf(*lambda, k) / Self::odd_normalizer(*lambda)
                } else {
                    0.0
                }
            }
            DimPrior::Point { k: at } => {
                if k == *at {
                    1.0
                } else {
                    0.0
                }
            }
            DimPrior::Table { pmf } => pmf.get(k).copied().unwrap_or(0.0),
        }
    }

    pub fn ln_pmf(&self, k: usize) -> f64 {
        self.pmf(k).ln()
    }

    /// `P(κ > k) = Σ_{i>k} h(i)`; `k = −1` means no terms are kept and gives 1.
    ///
    /// Poisson tails are summed directly from `k + 1` upward (never as
    /// `1 − partial sum`), stopping once the geometric bound on the remaining
    /// terms falls below `1e-17` of the running total.
    pub fn tail_mass(&self, k: i64) -> Result<f64> {
        if k < -1 {
            return Err(contract(format!("tail mass requested below k = -1 (got {k})")));
        }
        if k == -1 {
            return Ok(1.0);
        }
        let k = k as usize;
        Ok(match self {
            DimPrior::Poisson { lambda } => poisson_tail(*lambda, k + 1, 1),
            DimPrior::OddPoisson { lambda } => {
                let first_odd = if (k + 1) % 2 == 1 { k + 1 } else { k + 2 };
                poisson_tail(*lambda, first_odd, 2) / Self::odd_normalizer(*lambda)
            }
            DimPrior::Point { k: at } => {
                if *at > k {
                    1.0
                } else {
                    0.0
                }
            }
            DimPrior::Table { pmf } => pmf.iter().skip(k + 1).sum(),
        })
    }

    /// `h` restricted to `{0, …, k_max}` and renormalized.
    pub fn restricted_pmf(&self, k_max: usize) -> Result<Vec<f64>> {
        let raw: Vec<f64> = (0..=k_max).map(|k| self.pmf(k)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config(format!(
                "dimension prior has no mass at or below k_max = {k_max}"
            )));
        }
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    /// Smallest κ with positive mass.
    pub fn min_support(&self) -> usize {
        match self {
            DimPrior::Poisson { .. } => 0,
            DimPrior::OddPoisson { .. } => 1,
            DimPrior::Point { k } => *k,
            DimPrior::Table { pmf } => pmf.iter().position(|&p| p > 0.0).unwrap_or(0),
        }
    }

    /// Draws from the untruncated h.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            DimPrior::Point { k } => *k,
            DimPrior::Table { pmf } => super::sample_index(rng, pmf),
            DimPrior::Poisson { .. } | DimPrior::OddPoisson { .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = 0;
                loop {
                    acc += self.pmf(k);
                    if u < acc || k > 100_000 {
                        return k;
                    }
                    k += 1;
                }
            }
        }
    }
}

/// `Σ_{i = start, start+stride, …} Po(i; λ)`.
fn poisson_tail(lambda: f64, start: usize, stride: usize) -> f64 {
    let mut sum = 0.0;
    let mut i = start;
    loop {
        let term = DimPrior::poisson_pmf(lambda, i);
        sum += term;
        let next = i + stride;
        if next as f64 > lambda {
            // successive ratios are below r from here on
            let r = (lambda / (next as f64)).powi(stride as i32);
            let remainder = term * r / (1.0 - r);
            if remainder <= 1e-17 * sum || (sum == 0.0 && term == 0.0 && i as f64 > lambda) {
                break;
            }
        }
        i = next;
    }
    sum
}
