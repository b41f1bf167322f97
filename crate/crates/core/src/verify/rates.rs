//! Toy problems with exact posteriors for checking the discretization and
//! truncation rates in total variation.
//!
//! Both use one observation `y ~ N(η(θ), σ²)` of a scalar θ with `η(θ) = θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{grid_posterior, grid_tv, ln_normal, Axis, Grid, GridPosterior};
use crate::error::{contract, Error, Result};
use crate::priors::DimPrior;
use crate::special::log_sum_exp;

/// `sup_η |∂/∂η N(y; η, σ²)|`.
fn gaussian_lipschitz(sigma: f64) -> f64 {
    (-0.5f64).exp() / ((2.0 * PI).sqrt() * sigma * sigma)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(contract("slope fit needs at least two paired values"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate("slope fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// First index from which every row satisfies its bound.
fn threshold(holds: &[bool]) -> Option<usize> {
    let last_fail = holds.iter().rposition(|h| !h);
    match last_fail {
        None => Some(0),
        Some(i) if i + 1 < holds.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// Perturbed forward map `η_n(θ) = θ + c·n^{−p}·sin(3θ)` under a `N(0, s²)` prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateNConfig {
    pub sigma: f64,
    pub y: f64,
    pub prior_sd: f64,
    pub c: f64,
    pub p: f64,
    pub n_list: Vec<u32>,
    pub grid: Axis,
}

impl RateNConfig {
    pub fn with_order(p: f64) -> Self {
        let n_list = if p > 3.0 { vec![2, 4, 8, 16] } else { vec![4, 8, 16, 32, 64] };
        Self {
            sigma: 0.3,
            y: 0.8,
            prior_sd: 1.0,
            c: 1.0,
            p,
            n_list,
            grid: Axis { lo: -6.0, hi: 6.0, points: 4001 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.prior_sd > 0.0 && self.p > 0.0) || self.n_list.is_empty() {
            return Err(Error::Config("rate experiment needs positive sigma, prior sd, p and some n".into()));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Config("discretization levels must be positive".into()));
        }
        Ok(())
    }

    fn perturbation(&self, n: u32) -> f64 {
        self.c * (n as f64).powf(-self.p)
    }

    fn posterior(&self, grid: Grid, n: Option<u32>) -> Result<GridPosterior> {
        let amp = n.map_or(0.0, |n| self.perturbation(n));
        grid_posterior(
            |t| ln_normal(self.y, t[0] + amp * (3.0 * t[0]).sin(), self.sigma),
            |t| ln_normal(t[0], 0.0, self.prior_sd),
            grid,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateNRow {
    pub n: u32,
    pub tv: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateNReport {
    pub p: f64,
    pub slope: f64,
    /// `K₁ = L·|c|` with `L` the Lipschitz constant of the likelihood in η.
    pub k1: f64,
    pub z: f64,
    pub rows: Vec<RateNRow>,
    /// Smallest tested n from which every TV is below its bound.
    pub threshold_n: Option<u32>,
    /// Largest change of any TV when the grid resolution is doubled.
    pub grid_refinement_change: f64,
}

fn rate_rows_n(cfg: &RateNConfig, grid: Grid) -> Result<(Vec<RateNRow>, f64, f64)> {
    let exact = cfg.posterior(grid, None)?;
    let z = exact.z();
    let k1 = gaussian_lipschitz(cfg.sigma) * cfg.c.abs();
    let rows = cfg
        .n_list
        .iter()
        .map(|&n| {
            let tv = grid_tv(&cfg.posterior(grid, Some(n))?, &exact)?;
            let bound = k1 / z * (n as f64).powf(-cfg.p);
            Ok(RateNRow {
                n,
                tv,
                bound,
                ratio: if bound > 0.0 { tv / bound } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, k1, z))
}

/// TV table without the slope fit; valid for `c = 0`.
pub fn rate_table_n(cfg: &RateNConfig) -> Result<Vec<RateNRow>> {
    cfg.validate()?;
    Ok(rate_rows_n(cfg, Grid::Line(cfg.grid))?.0)
}

pub fn rate_experiment_n(cfg: &RateNConfig) -> Result<RateNReport> {
    cfg.validate()?;
    let (rows, k1, z) = rate_rows_n(cfg, Grid::Line(cfg.grid))?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let tvs: Vec<f64> = rows.iter().map(|r| r.tv).collect();
    let slope = fit_slope(&ns, &tvs)?;
    let (fine, _, _) = rate_rows_n(cfg, Grid::Line(cfg.grid.refined()))?;
    let change = rows
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a.tv - b.tv).abs())
        .fold(0.0, f64::max);
    let holds: Vec<bool> = rows.iter().map(|r| r.tv < r.bound).collect();
    Ok(RateNReport {
        p: cfg.p,
        slope,
        k1,
        z,
        threshold_n: threshold(&holds).map(|i| rows[i].n),
        rows,
        grid_refinement_change: change,
    })
}

/// Prior `θ = Σ_{i=0}^{κ} β_i`, `β_i ~ N(0, (s₀ rⁱ)²)`, `κ ~ h`. Both π and its
/// truncation `π_k` (κ capped at k) are normal variance mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateKConfig {
    pub sigma: f64,
    pub y: f64,
    pub dim_prior: DimPrior,
    pub s0: f64,
    pub ratio: f64,
    pub k_list: Vec<usize>,
    /// Discretization levels for the combined `(n, k)` check.
    pub n_list: Vec<u32>,
    pub c: f64,
    pub p: f64,
    pub grid: Axis,
}

impl Default for RateKConfig {
    fn default() -> Self {
        Self {
            sigma: 0.3,
            y: 0.8,
            dim_prior: DimPrior::Poisson { lambda: 3.0 },
            s0: 1.0,
            ratio: 0.7,
            k_list: vec![2, 4, 8],
            n_list: vec![4, 8, 16],
            c: 1.0,
            p: 2.0,
            grid: Axis { lo: -8.0, hi: 8.0, points: 4001 },
        }
    }
}

const KAPPA_CAP: usize = 400;

impl RateKConfig {
    pub fn validate(&self) -> Result<()> {
        self.dim_prior.validate()?;
        if !(self.sigma > 0.0 && self.s0 > 0.0 && self.ratio > 0.0 && self.ratio < 1.0 && self.p > 0.0) {
            return Err(Error::Config("rate_k needs sigma, s0, p > 0 and 0 < ratio < 1".into()));
        }
        if self.k_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::Config("rate_k needs some k and positive n".into()));
        }
        Ok(())
    }

    fn variance(&self, kappa: usize) -> f64 {
        let r2 = self.ratio * self.ratio;
        self.s0 * self.s0 * (1.0 - r2.powi(kappa as i32 + 1)) / (1.0 - r2)
    }

    /// `(weight, variance)` components of π_k; `None` for the full prior.
    fn components(&self, k: Option<usize>) -> Result<Vec<(f64, f64)>> {
        let cap = k.unwrap_or(KAPPA_CAP);
        let mut comps: Vec<(f64, f64)> = (0..=cap)
            .map(|i| (self.dim_prior.pmf(i), self.variance(i)))
            .filter(|c| c.0 > 0.0)
            .collect();
        let rest = self.dim_prior.tail_mass(cap as i64)?;
        if rest > 0.0 {
            let v = match k {
                Some(k) => self.variance(k),
                None => self.s0 * self.s0 / (1.0 - self.ratio * self.ratio),
            };
            comps.push((rest, v));
        }
        Ok(comps)
    }

    fn ln_prior(comps: &[(f64, f64)], t: f64) -> f64 {
        let terms: Vec<f64> = comps
            .iter()
            .map(|&(w, v)| w.ln() + ln_normal(t, 0.0, v.sqrt()))
            .collect();
        log_sum_exp(&terms)
    }

    fn posterior(&self, comps: &[(f64, f64)], n: Option<u32>) -> Result<GridPosterior> {
        let amp = n.map_or(0.0, |n| self.c * (n as f64).powf(-self.p));
        grid_posterior(
            |t| ln_normal(self.y, t[0] + amp * (3.0 * t[0]).sin(), self.sigma),
            |t| Self::ln_prior(comps, t[0]),
            Grid::Line(self.grid),
        )
    }

    fn prior_tv(&self, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        let grid = Grid::Line(self.grid);
        let diff: Vec<f64> = (0..grid.len())
            .map(|i| {
                let t = grid.point(i)[0];
                (Self::ln_prior(a, t).exp() - Self::ln_prior(b, t).exp()).abs()
            })
            .collect();
        0.5 * grid.integrate(&diff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateKRow {
    pub k: usize,
    pub tv_posterior: f64,
    pub tv_prior: f64,
    /// `P(κ > k)`, the coupling bound on `tv_prior`.
    pub tail_mass: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedRow {
    pub n: u32,
    pub k: usize,
    pub tv: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateKReport {
    /// `f(y | θ̂) / Z(y)`.
    pub lipschitz_factor: f64,
    pub rows: Vec<RateKRow>,
    pub combined: Vec<CombinedRow>,
    pub threshold_k: Option<usize>,
    pub all_hold: bool,
}

pub fn rate_experiment_k(cfg: &RateKConfig) -> Result<RateKReport> {
    cfg.validate()?;
    let full = cfg.components(None)?;
    let exact = cfg.posterior(&full, None)?;
    let z = exact.z();
    let f_max = 1.0 / ((2.0 * PI).sqrt() * cfg.sigma);
    let factor = f_max / z;
    let k1 = gaussian_lipschitz(cfg.sigma) * cfg.c.abs();
    let mut rows = Vec::new();
    let mut combined = Vec::new();
    for &k in &cfg.k_list {
        let comps = cfg.components(Some(k))?;
        let post_k = cfg.posterior(&comps, None)?;
        let tv_prior = cfg.prior_tv(&comps, &full);
        let tv_posterior = grid_tv(&post_k, &exact)?;
        let bound = factor * tv_prior;
        rows.push(RateKRow {
            k,
            tv_posterior,
            tv_prior,
            tail_mass: cfg.dim_prior.tail_mass(k as i64)?,
            bound,
            holds: tv_posterior <= bound,
        });
        for &n in &cfg.n_list {
            let tv = grid_tv(&cfg.posterior(&comps, Some(n))?, &exact)?;
            let bound = k1 / post_k.z() * (n as f64).powf(-cfg.p) + factor * tv_prior;
            combined.push(CombinedRow {
                n,
                k,
                tv,
                bound,
                holds: tv <= bound,
            });
        }
    }
    let holds: Vec<bool> = rows.iter().map(|r| r.holds).collect();
    Ok(RateKReport {
        lipschitz_factor: factor,
        threshold_k: threshold(&holds).map(|i| rows[i].k),
        all_hold: rows.iter().all(|r| r.holds) && combined.iter().all(|r| r.holds),
        rows,
        combined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoAtomReport {
    pub tv_prior: f64,
    pub tv_posterior: f64,
    pub bound: f64,
}

/// Prior on two atoms with weights `(w, 1−w)` and likelihoods `(f1, f2)`;
/// the truncated prior moves mass `eps` from the second atom to the first.
pub fn two_atom_check(w: f64, eps: f64, f1: f64, f2: f64) -> Result<TwoAtomReport> {
    if !(0.0..=1.0).contains(&w) || !(0.0..=1.0 - w).contains(&eps) || !(f1 >= 0.0 && f2 >= 0.0) {
        return Err(contract("two-atom check needs valid weights and nonnegative likelihoods"));
    }
    let z = w * f1 + (1.0 - w) * f2;
    let zk = (w + eps) * f1 + (1.0 - w - eps) * f2;
    if !(z > 0.0 && zk > 0.0) {
        return Err(Error::Degenerate("two-atom evidence vanishes".into()));
    }
    let q1 = w * f1 / z;
    let qk1 = (w + eps) * f1 / zk;
    Ok(TwoAtomReport {
        tv_prior: eps,
        tv_posterior: (qk1 - q1).abs(),
        bound: f1.max(f2) / z * eps,
    })
}
