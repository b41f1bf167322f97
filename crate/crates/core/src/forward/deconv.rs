//! Box-kernel blurring of a sine–cosine series on `[0, 1]`.
//!
//! `η(x) = (1/2α) ∫_{max(x−α,0)}^{min(x+α,1)} θ(z) dz` with θ in the flattened
//! layout `[β₀, β₁, α₁, β₂, α₂, …]`.

use std::f64::consts::PI;

use super::{Discretization, ForwardMap, ForwardSolve};
use crate::error::{contract, Result};
use crate::priors::Basis;

fn window(alpha: f64, x: f64) -> (f64, f64) {
    ((x - alpha).max(0.0), (x + alpha).min(1.0))
}

fn antiderivative(coefficients: &[f64], z: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if i == 0 {
                return c * z;
            }
            let w = 2.0 * PI * ((i + 1) / 2) as f64;
            if i % 2 == 1 {
                c * (w * z).sin() / w
            } else {
                -c * (w * z).cos() / w
            }
        })
        .sum()
}

pub fn convolve_analytic(coefficients: &[f64], alpha: f64, x: f64) -> f64 {
    let (lo, hi) = window(alpha, x);
    (antiderivative(coefficients, hi) - antiderivative(coefficients, lo)) / (2.0 * alpha)
}

/// Composite Simpson rule with `n_grid` uniform subintervals of the window.
pub fn convolve_simpson(coefficients: &[f64], alpha: f64, x: f64, n_grid: usize) -> Result<f64> {
    if n_grid < 2 || n_grid % 2 != 0 {
        return Err(contract(format!("Simpson grid must be even and >= 2, got {n_grid}")));
    }
    let (lo, hi) = window(alpha, x);
    let h = (hi - lo) / n_grid as f64;
    let f = |z: f64| -> f64 {
        coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * Basis::SineCosine.eval(i, z))
            .sum()
    };
    let mut acc = f(lo) + f(hi);
    for j in 1..n_grid {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + j as f64 * h);
    }
    Ok(acc * h / 3.0 / (2.0 * alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvForward {
    alpha: f64,
    design: Vec<f64>,
}

impl DeconvForward {
    pub fn new(alpha: f64, design: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(contract(format!("kernel half-width must lie in (0, 1), got {alpha}")));
        }
        if design.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(contract("deconvolution design points must lie in [0, 1]"));
        }
        Ok(Self { alpha, design })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }
}

impl ForwardMap for DeconvForward {
    fn observation_count(&self) -> usize {
        self.design.len()
    }

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve> {
        let exact: Vec<f64> = self
            .design
            .iter()
            .map(|&x| convolve_analytic(theta, self.alpha, x))
            .collect();
        match *discretization {
            Discretization::Exact => Ok(ForwardSolve::exact(exact)),
            Discretization::Grid { n } => {
                let mut eta = Vec::with_capacity(exact.len());
                let mut worst = 0.0f64;
                for (&x, &e) in self.design.iter().zip(&exact) {
                    let s = convolve_simpson(theta, self.alpha, x, n)?;
                    worst = worst.max((s - e).abs());
                    eta.push(s);
                }
                Ok(ForwardSolve {
                    eta,
                    error_estimate: worst,
                    discretization: *discretization,
                })
            }
            other => Err(contract(format!("deconvolution does not support {other}"))),
        }
    }
}
