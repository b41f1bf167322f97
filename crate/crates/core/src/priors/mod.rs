//! Series priors on function space and their finite-dimensional truncations.
//!
//! A parameter function is expanded as `θ(t) = θ₀(t) + Σ_{i<κ} β_i φ_i(t)` with a
//! random number of terms κ ~ h. Truncating κ at `k_max` gives the prior
//! actually sampled; its total-variation distance to the untruncated prior is
//! at most `P(κ > k_max)` ([`DimPrior::tail_mass`]).

mod coeff;
mod dim;
mod gmrf;

pub use coeff::CoeffPrior;
pub use dim::DimPrior;
pub use gmrf::GmrfPrior;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis families used by the worked examples. Coefficient index `i` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `φ_i(x) = (−1)^n sin(nπx)` with `n = i + 1`.
    WaveSine,
    /// Flattened `[1, cos 2πt, sin 2πt, cos 4πt, sin 4πt, …]`. The raw
    /// functions are used, so the trigonometric terms have L₂ norm `1/√2`.
    SineCosine,
}

impl Basis {
    pub fn eval(self, index: usize, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Basis::WaveSine => {
                let n = (index + 1) as f64;
                let sign = if (index + 1) % 2 == 0 { 1.0 } else { -1.0 };
                sign * (n * PI * t).sin()
            }
            Basis::SineCosine => {
                if index == 0 {
                    return 1.0;
                }
                let freq = 2.0 * PI * ((index + 1) / 2) as f64;
                if index % 2 == 1 {
                    (freq * t).cos()
                } else {
                    (freq * t).sin()
                }
            }
        }
    }
}

/// `θ₀ + Σ β_i φ_i` with a constant base function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    #[serde(default)]
    pub theta0: f64,
    pub basis: Basis,
}

impl SeriesExpansion {
    pub fn new(basis: Basis) -> Self {
        Self { theta0: 0.0, basis }
    }

    pub fn evaluate(&self, coefficients: &[f64], t: f64) -> f64 {
        self.theta0
            + coefficients
                .iter()
                .enumerate()
                .map(|(i, b)| b * self.basis.eval(i, t))
                .sum::<f64>()
    }
}

/// How coefficient scales decay with index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `s_i = s₀ e^{−i·rate}`.
    Flat,
    /// Intercept then (cos, sin) pairs: `s₀` for index 0 and
    /// `s₀ e^{−(j−1)·rate}` for both members of pair `j ≥ 1`.
    Paired,
}

/// Independent zero-mean (optionally truncated) normal coefficients with
/// geometrically decaying scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSchedule {
    /// Half-width `a` of the support `[−a, a]`; `None` for untruncated normals.
    pub truncation: Option<f64>,
    pub scale0: f64,
    pub decay: f64,
    pub layout: Layout,
}

impl CoeffSchedule {
    pub fn scale(&self, index: usize) -> f64 {
        let steps = match self.layout {
            Layout::Flat => index as f64,
            Layout::Paired if index == 0 => 0.0,
            Layout::Paired => ((index + 1) / 2 - 1) as f64,
        };
        self.scale0 * (-steps * self.decay).exp()
    }

    pub fn prior(&self, index: usize) -> CoeffPrior {
        let s = self.scale(index);
        match self.truncation {
            Some(a) => CoeffPrior::TruncatedNormal { a, s },
            None => CoeffPrior::Normal { sd: s },
        }
    }

    /// `Σ_{i≥0} E|β_i|`, or `None` when the series diverges.
    pub fn abs_moment_sum(&self) -> Option<f64> {
        if !(self.decay > 0.0) {
            return None;
        }
        // E|β| is increasing in the scale for both families, so the tail is
        // bounded by the geometric series of the untruncated moments.
        let q = (-self.decay).exp();
        let per_scale = (2.0 / std::f64::consts::PI).sqrt();
        let head: usize = 2000;
        let partial: f64 = (0..head).map(|i| self.prior(i).mean_abs()).sum();
        let last = self.scale(head);
        let tail_bound = match self.layout {
            Layout::Flat => per_scale * last / (1.0 - q),
            Layout::Paired => 2.0 * per_scale * last / (1.0 - q),
        };
        Some(partial + tail_bound)
    }
}

/// Random-dimension series prior truncated at `k_max` coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesPrior {
    pub expansion: SeriesExpansion,
    pub coefficients: CoeffSchedule,
    pub dim_prior: DimPrior,
    pub k_max: usize,
}

impl SeriesPrior {
    pub fn new(
        expansion: SeriesExpansion,
        coefficients: CoeffSchedule,
        dim_prior: DimPrior,
        k_max: usize,
    ) -> Result<Self> {
        let prior = Self {
            expansion,
            coefficients,
            dim_prior,
            k_max,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        self.dim_prior.validate()?;
        if self.coefficients.abs_moment_sum().is_none() {
            return Err(Error::Config(
                "coefficient scales must decay so that Σ E|β_i| is finite".into(),
            ));
        }
        if !(self.coefficients.scale0 > 0.0) {
            return Err(Error::Config("coefficient scale must be positive".into()));
        }
        self.dim_prior.restricted_pmf(self.k_max).map(|_| ())
    }

    /// `P(κ > k_max)`, the TV bound between the truncated and full prior.
    pub fn tail_mass(&self) -> f64 {
        self.dim_prior
            .tail_mass(self.k_max as i64)
            .expect("k_max is non-negative")
    }

    /// Draws κ from h restricted to `κ ≤ k_max`, then κ coefficients.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, Vec<f64>)> {
        let pmf = self.dim_prior.restricted_pmf(self.k_max)?;
        let kappa = sample_index(rng, &pmf);
        Ok((kappa, self.sample_coefficients(rng, kappa)))
    }

    /// A draw of the projected prior `θ_k = θ₀ + Σ_{i < min(κ, k)} β_i φ_i` where
    /// κ comes from the *untruncated* h. Used to check the coupling bound.
    pub fn sample_projected<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> (usize, Vec<f64>) {
        let kappa = self.dim_prior.sample(rng);
        let coeffs = self.sample_coefficients(rng, kappa);
        (kappa, coeffs.into_iter().take(k).collect())
    }

    fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R, kappa: usize) -> Vec<f64> {
        (0..kappa)
            .map(|i| self.coefficients.prior(i).sample(rng))
            .collect()
    }

    /// Log density of the coefficients for a given dimension, without the
    /// dimension prior term.
    pub fn log_coeff_density(&self, coefficients: &[f64]) -> f64 {
        coefficients
            .iter()
            .enumerate()
            .map(|(i, &b)| self.coefficients.prior(i).ln_pdf(b))
            .sum()
    }

    pub fn evaluate(&self, coefficients: &[f64], t: f64) -> f64 {
        self.expansion.evaluate(coefficients, t)
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(rng: &mut R, pmf: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn deconv_prior() -> SeriesPrior {
        SeriesPrior::new(
            SeriesExpansion::new(Basis::SineCosine),
            CoeffSchedule {
                truncation: Some(1.0),
                scale0: 0.3,
                decay: 0.1 * 10f64.ln(),
                layout: Layout::Paired,
            },
            DimPrior::OddPoisson { lambda: 8.0 },
            15,
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_give_base_function() {
        let mut e = SeriesExpansion::new(Basis::WaveSine);
        e.theta0 = 0.25;
        assert_eq!(e.evaluate(&[0.0; 5], 0.37), 0.25);
    }

    #[test]
    fn wave_basis_reproduces_true_initial_profile() {
        // u(x,1) at x = 0.5 with A = (1.5, 0.8, 0.7, 0.3):
        // −1.5 sin(π/2) + 0.8 sin(π) − 0.7 sin(3π/2) + 0.3 sin(2π)
        let e = SeriesExpansion::new(Basis::WaveSine);
        let a = [1.5, 0.8, 0.7, 0.3];
        let direct: f64 = a
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = (i + 1) as f64;
                c * (-1f64).powi(i as i32 + 1) * (n * PI * 0.5).sin()
            })
            .sum();
        assert!((e.evaluate(&a, 0.5) - direct).abs() < 1e-14);
        assert!((direct - (-0.8)).abs() < 1e-12);
    }

    #[test]
    fn sine_cosine_true_function_at_origin() {
        let e = SeriesExpansion::new(Basis::SineCosine);
        let coeffs = [0.9, -0.4, -0.4, -0.3, -0.3, -0.2, -0.2];
        assert!(e.evaluate(&coeffs, 0.0).abs() < 1e-12);
    }

    #[test]
    fn paired_schedule_loses_a_decade_over_ten_pairs() {
        let sched = deconv_prior().coefficients;
        // pair j sits at flat indices 2j-1, 2j
        let s1 = sched.scale(1);
        assert_eq!(s1, sched.scale(2));
        assert!((s1 - 0.3).abs() < 1e-15);
        assert!((sched.scale(21) / s1 - 0.1).abs() < 1e-12);
        assert!((sched.scale(19) / s1 - 10f64.powf(-0.9)).abs() < 1e-12);
        assert_eq!(sched.scale(0), 0.3);
    }

    #[test]
    fn point_mass_dimension_yields_fixed_count() {
        let mut p = deconv_prior();
        p.dim_prior = DimPrior::Point { k: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (kappa, c) = p.sample_truncated(&mut rng).unwrap();
            assert_eq!(kappa, 3);
            assert_eq!(c.len(), 3);
        }
    }

    #[test]
    fn truncated_samples_respect_k_max_and_support() {
        let p = deconv_prior();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let (kappa, c) = p.sample_truncated(&mut rng).unwrap();
            assert!(kappa <= 15 && kappa % 2 == 1);
            assert!(c.iter().all(|b| b.abs() <= 1.0));
        }
    }

    #[test]
    fn empty_restricted_support_is_a_configuration_error() {
        let p = SeriesPrior {
            k_max: 0,
            ..deconv_prior()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(p.sample_truncated(&mut rng), Err(Error::Config(_))));
        assert!(p.validate().is_err());
    }

    #[test]
    fn non_decaying_schedule_is_not_summable() {
        let mut p = deconv_prior();
        p.coefficients.decay = 0.0;
        assert!(p.validate().is_err());
        assert!(deconv_prior().coefficients.abs_moment_sum().unwrap().is_finite());
    }
}
