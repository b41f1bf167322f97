//! Brute-force grid posteriors and empirical checks of the total-variation
//! convergence rates.

mod lemma;
mod rates;

pub use lemma::{lemma_a2_check, LemmaConfig, LemmaConstruction, LemmaReport, LemmaRow};
pub use rates::{
    fit_slope, rate_experiment_k, rate_experiment_n, rate_table_n, two_atom_check, CombinedRow, RateKConfig,
    RateKReport, RateKRow, RateNConfig, RateNReport, RateNRow, TwoAtomReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Boundary density must be below this fraction of the peak.
pub const BOUNDARY_RATIO: f64 = 1e-12;

/// Uniform grid of `points` nodes on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 3 {
            return Err(contract("axis needs hi > lo and at least 3 points"));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.points {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// Same interval with twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Line(Axis),
    Plane(Axis, Axis),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Line(a) => a.points,
            Grid::Plane(a, b) => a.points * b.points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            Grid::Plane(..) => 2,
        }
    }

    /// Node `idx`; on a plane the first coordinate runs fastest.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self {
            Grid::Line(a) => vec![a.node(idx)],
            Grid::Plane(a, b) => vec![a.node(idx % a.points), b.node(idx / a.points)],
        }
    }

    fn weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Line(a) => a.weight(idx),
            Grid::Plane(a, b) => a.weight(idx % a.points) * b.weight(idx / a.points),
        }
    }

    fn on_boundary(&self, idx: usize) -> bool {
        match self {
            Grid::Line(a) => idx == 0 || idx + 1 == a.points,
            Grid::Plane(a, b) => {
                let (i, j) = (idx % a.points, idx / a.points);
                i == 0 || j == 0 || i + 1 == a.points || j + 1 == b.points
            }
        }
    }

    pub fn refined(&self) -> Self {
        match self {
            Grid::Line(a) => Grid::Line(a.refined()),
            Grid::Plane(a, b) => Grid::Plane(a.refined(), b.refined()),
        }
    }

    /// Trapezoid rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v)
            .sum()
    }
}

/// Normalized posterior density tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    grid: Grid,
    density: Vec<f64>,
    log_z: f64,
}

impl GridPosterior {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Log of the normalizer of `exp(log_likelihood + log_prior)`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.grid.dim())
            .map(|d| {
                let v: Vec<f64> = (0..self.grid.len())
                    .map(|i| self.grid.point(i)[d] * self.density[i])
                    .collect();
                self.grid.integrate(&v)
            })
            .collect()
    }

    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let v: Vec<f64> = (0..self.grid.len())
            .map(|i| f(&self.grid.point(i)) * self.density[i])
            .collect();
        self.grid.integrate(&v)
    }
}

/// Tabulates `exp(log_likelihood + log_prior)` and normalizes it by the
/// trapezoid rule. Fails if the density on the grid boundary is not
/// negligible.
pub fn grid_posterior<L, P>(log_likelihood: L, log_prior: P, grid: Grid) -> Result<GridPosterior>
where
    L: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> f64,
{
    let logs: Vec<f64> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let lp = log_prior(&p);
            if lp == f64::NEG_INFINITY {
                lp
            } else {
                lp + log_likelihood(&p)
            }
        })
        .collect();
    if logs.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonFinite("log density on the grid".into()));
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Degenerate("posterior vanishes on the whole grid".into()));
    }
    let w: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
    let edge = (0..grid.len())
        .filter(|&i| grid.on_boundary(i))
        .map(|i| w[i])
        .fold(0.0, f64::max);
    if edge > BOUNDARY_RATIO {
        return Err(Error::GridTooSmall { ratio: edge });
    }
    let mass = grid.integrate(&w);
    Ok(GridPosterior {
        grid,
        density: w.iter().map(|v| v / mass).collect(),
        log_z: max + mass.ln(),
    })
}

/// `½ ∫ |p − q|` by the trapezoid rule on the shared grid.
pub fn grid_tv(p: &GridPosterior, q: &GridPosterior) -> Result<f64> {
    if p.grid != q.grid {
        return Err(contract("grid_tv needs posteriors on the same grid"));
    }
    let diff: Vec<f64> = p
        .density
        .iter()
        .zip(&q.density)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(0.5 * p.grid.integrate(&diff))
}

/// Normal log density, used by the toy problems.
pub(crate) fn ln_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - crate::special::LN_SQRT_2PI
}
