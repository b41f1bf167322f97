//! Terminal displacement of the vibrating string, `u(x,1) = Σ A_n (−1)^n sin(nπx)`.

use super::{Discretization, ForwardMap, ForwardSolve};
use crate::error::{contract, Result};
use crate::priors::Basis;

pub fn wave_fm(coefficients: &[f64], design: &[f64]) -> Vec<f64> {
    design
        .iter()
        .map(|&z| {
            coefficients
                .iter()
                .enumerate()
                .map(|(i, a)| a * Basis::WaveSine.eval(i, z))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveForward {
    design: Vec<f64>,
}

impl WaveForward {
    pub fn new(design: Vec<f64>) -> Self {
        Self { design }
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }
}

impl ForwardMap for WaveForward {
    fn observation_count(&self) -> usize {
        self.design.len()
    }

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve> {
        if *discretization != Discretization::Exact {
            return Err(contract("the wave forward map is only available in closed form"));
        }
        Ok(ForwardSolve::exact(wave_fm(theta, &self.design)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode() {
        let eta = wave_fm(&[1.0], &[0.5]);
        assert!((eta[0] + 1.0).abs() < 1e-15);
        assert_eq!(wave_fm(&[0.0; 4], &[0.1, 0.2]), vec![0.0, 0.0]);
    }
}
