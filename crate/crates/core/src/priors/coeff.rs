use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::special::{sample_truncated_normal, std_normal, std_normal_cdf, LN_SQRT_2PI};

/// Scalar prior for one expansion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffPrior {
    Normal { sd: f64 },
    /// Zero-mean normal with scale `s` restricted to `[−a, a]`.
    TruncatedNormal { a: f64, s: f64 },
    /// Gamma(shape, rate) restricted to `[0, upper]`.
    TruncatedGamma { shape: f64, rate: f64, upper: f64 },
}

impl CoeffPrior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CoeffPrior::Normal { sd } => sd > 0.0,
            CoeffPrior::TruncatedNormal { a, s } => a > 0.0 && s > 0.0,
            CoeffPrior::TruncatedGamma { shape, rate, upper } => shape > 0.0 && rate > 0.0 && upper > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid coefficient prior {self:?}")))
        }
    }

    /// `(lo, hi)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            CoeffPrior::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            CoeffPrior::TruncatedNormal { a, .. } => (-a, a),
            CoeffPrior::TruncatedGamma { upper, .. } => (0.0, upper),
        }
    }

    /// Mass of the untruncated normal inside `[−a, a]`: `1 − 2Φ(−a/s)`.
    pub fn truncated_normal_mass(a: f64, s: f64) -> f64 {
        1.0 - 2.0 * std_normal_cdf(-a / s)
    }

    /// Log density including the truncation normalizer; `−∞` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            CoeffPrior::Normal { sd } => {
                let z = x / sd;
                -0.5 * z * z - LN_SQRT_2PI - sd.ln()
            }
            CoeffPrior::TruncatedNormal { a, s } => {
                if x.abs() > a {
                    return f64::NEG_INFINITY;
                }
                let z = x / s;
                -0.5 * z * z - LN_SQRT_2PI - s.ln() - Self::truncated_normal_mass(a, s).ln()
            }
            CoeffPrior::TruncatedGamma { shape, rate, upper } => {
                if !(x > 0.0 && x <= upper) {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                    - gamma_lr(shape, rate * upper).ln()
            }
        }
    }

    /// Analytic `E|β|`.
    pub fn mean_abs(&self) -> f64 {
        match *self {
            CoeffPrior::Normal { sd } => sd * (2.0 / std::f64::consts::PI).sqrt(),
            CoeffPrior::TruncatedNormal { a, s } => {
                let ratio = a / s;
                let inner = if ratio.is_finite() {
                    -(-0.5 * ratio * ratio).exp_m1()
                } else {
                    1.0
                };
                2.0 * s * inner / (2.0 * std::f64::consts::PI).sqrt() / Self::truncated_normal_mass(a, s)
            }
            CoeffPrior::TruncatedGamma { shape, rate, upper } => {
                shape / rate * gamma_lr(shape + 1.0, rate * upper) / gamma_lr(shape, rate * upper)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoeffPrior::Normal { sd } => sd * std_normal(rng),
            CoeffPrior::TruncatedNormal { a, s } => sample_truncated_normal(rng, 0.0, s, -a, a),
            CoeffPrior::TruncatedGamma { shape, rate, upper } => {
                let gamma = Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters");
                loop {
                    let x: f64 = gamma.sample(rng);
                    if x <= upper {
                        break x;
                    }
                }
            }
        }
    }
}
