//! Numerical check of the normalizing-constant and TV perturbation lemmas for
//! `p = b/z` on `[0, 1]` with a uniform reference measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Axis, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaConstruction {
    /// `b_n = b`.
    Identity,
    /// `b_n = b + k n^{−p}`.
    ConstantShift,
    /// `b_n = b + k n^{−p} sign(sin(10θ))`.
    Oscillatory,
}

impl LemmaConstruction {
    pub const ALL: [LemmaConstruction; 3] = [
        LemmaConstruction::Identity,
        LemmaConstruction::ConstantShift,
        LemmaConstruction::Oscillatory,
    ];

    fn shift(self, theta: f64, size: f64) -> f64 {
        match self {
            LemmaConstruction::Identity => 0.0,
            LemmaConstruction::ConstantShift => size,
            LemmaConstruction::Oscillatory => {
                let s = (10.0 * theta).sin();
                if s > 0.0 {
                    size
                } else if s < 0.0 {
                    -size
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub k: f64,
    pub p: f64,
    pub n_list: Vec<u32>,
    pub points: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            k: 0.25,
            p: 2.0,
            n_list: vec![1, 2, 4, 8, 16, 32],
            points: 20001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub n: u32,
    pub z_gap: f64,
    pub z_bound: f64,
    pub tv: f64,
    pub tv_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub construction: LemmaConstruction,
    pub z: f64,
    pub rows: Vec<LemmaRow>,
    pub threshold_n: Option<u32>,
}

fn base(theta: f64) -> f64 {
    1.0 + 0.5 * (2.0 * PI * theta).sin()
}

/// Checks `|z_n − z| ≤ k n^{−p}` and `‖p_n − p‖_TV < (k/z) n^{−p}` for
/// `b(θ) = 1 + ½ sin(2πθ)`.
pub fn lemma_a2_check(construction: LemmaConstruction, cfg: &LemmaConfig) -> Result<LemmaReport> {
    if !(cfg.k >= 0.0 && cfg.p > 0.0) || cfg.n_list.contains(&0) {
        return Err(Error::Config("lemma check needs k >= 0, p > 0 and positive n".into()));
    }
    let grid = Grid::Line(Axis::new(0.0, 1.0, cfg.points)?);
    let thetas: Vec<f64> = (0..grid.len()).map(|i| grid.point(i)[0]).collect();
    let b: Vec<f64> = thetas.iter().map(|&t| base(t)).collect();
    let z = grid.integrate(&b);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let size = cfg.k * (n as f64).powf(-cfg.p);
        let bn: Vec<f64> = thetas
            .iter()
            .zip(&b)
            .map(|(&t, &v)| v + construction.shift(t, size))
            .collect();
        let premise = bn
            .iter()
            .zip(&b)
            .all(|(x, y)| *x > 0.0 && (x - y).abs() <= size * (1.0 + 1e-12));
        if !premise {
            return Err(Error::Degenerate(format!(
                "{construction:?} at n={n} leaves the premise (b_n > 0, |b_n − b| ≤ k n^-p)"
            )));
        }
        let zn = grid.integrate(&bn);
        let diff: Vec<f64> = bn.iter().zip(&b).map(|(x, y)| (x / zn - y / z).abs()).collect();
        let tv = 0.5 * grid.integrate(&diff);
        let z_gap = (zn - z).abs();
        let tv_bound = cfg.k / z * (n as f64).powf(-cfg.p);
        let tol = 1e-12 * size.max(1e-300);
        let holds = z_gap <= size + tol && (tv < tv_bound || (size == 0.0 && tv == 0.0));
        rows.push(LemmaRow {
            n,
            z_gap,
            z_bound: size,
            tv,
            tv_bound,
            holds,
        });
    }
    let threshold_n = match rows.iter().rposition(|r| !r.holds) {
        None => rows.first().map(|r| r.n),
        Some(i) => rows.get(i + 1).map(|r| r.n),
    };
    Ok(LemmaReport {
        construction,
        z,
        rows,
        threshold_n,
    })
}
