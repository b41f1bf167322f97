//! Transient heat equation on the unit square with homogeneous Dirichlet
//! boundary, initial condition `b sin(πx)sin(πy) + c sin(2πx)sin(πy)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Discretization, ForwardMap, ForwardSolve};
use crate::error::{contract, Error, Result};

const CG_TOL: f64 = 1e-13;
const BLOWUP_FACTOR: f64 = 10.0;

pub fn heat2d_exact(b: f64, c: f64, alpha: f64, x: f64, y: f64, t: f64) -> f64 {
    let sy = (PI * y).sin();
    b * (-2.0 * alpha * PI * PI * t).exp() * (PI * x).sin() * sy
        + c * (-5.0 * alpha * PI * PI * t).exp() * (2.0 * PI * x).sin() * sy
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heat2dParams {
    /// Diffusivity.
    pub alpha: f64,
    /// Observation time.
    pub t1: f64,
    pub observations: Vec<(f64, f64)>,
}

impl Heat2dParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.t1 > 0.0) {
            return Err(Error::Config("heat2d diffusivity and time must be positive".into()));
        }
        let inside = |v: &f64| (0.0..=1.0).contains(v);
        if self.observations.iter().any(|(x, y)| !inside(x) || !inside(y)) {
            return Err(Error::Config("heat2d observation points must lie in [0,1]^2".into()));
        }
        Ok(())
    }

    pub fn exact(&self, b: f64, c: f64) -> Vec<f64> {
        self.observations
            .iter()
            .map(|&(x, y)| heat2d_exact(b, c, self.alpha, x, y, self.t1))
            .collect()
    }
}

fn cells(h: f64) -> Result<usize> {
    let n = (1.0 / h).round();
    if !(h > 0.0) || n < 2.0 || (n * h - 1.0).abs() > 1e-9 {
        return Err(contract(format!("mesh width {h} must divide [0, 1] into at least 2 cells")));
    }
    Ok(n as usize)
}

/// Interior-node Laplacian with zero Dirichlet data; `u` has `(nx−1)(ny−1)` entries.
fn laplacian(u: &[f64], nx: usize, ny: usize, dx: f64, dy: f64, out: &mut [f64]) {
    let (mx, my) = (nx - 1, ny - 1);
    let (ix2, iy2) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    for j in 0..my {
        for i in 0..mx {
            let k = j * mx + i;
            let c = u[k];
            let w = if i > 0 { u[k - 1] } else { 0.0 };
            let e = if i + 1 < mx { u[k + 1] } else { 0.0 };
            let s = if j > 0 { u[k - mx] } else { 0.0 };
            let n = if j + 1 < my { u[k + mx] } else { 0.0 };
            out[k] = (w - 2.0 * c + e) * ix2 + (s - 2.0 * c + n) * iy2;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Crank–Nicolson time stepping of interior values. Returns the interior
/// field after `steps` steps of size `dt`.
pub fn crank_nicolson(
    initial: &[f64],
    (nx, ny): (usize, usize),
    (dx, dy): (f64, f64),
    alpha: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let len = (nx - 1) * (ny - 1);
    if initial.len() != len {
        return Err(contract("initial field has the wrong size"));
    }
    let r = 0.5 * alpha * dt;
    let sup0 = initial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut u = initial.to_vec();
    let mut rhs = vec![0.0; len];
    let mut lap = vec![0.0; len];
    let mut res = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut ap = vec![0.0; len];
    for step in 0..steps {
        laplacian(&u, nx, ny, dx, dy, &mut lap);
        for k in 0..len {
            rhs[k] = u[k] + r * lap[k];
        }
        // Solve (I − rL) u = rhs by conjugate gradients, warm-started.
        laplacian(&u, nx, ny, dx, dy, &mut lap);
        for k in 0..len {
            res[k] = rhs[k] - (u[k] - r * lap[k]);
        }
        p.copy_from_slice(&res);
        let bnorm = dot(&rhs, &rhs).sqrt();
        let mut rr = dot(&res, &res);
        let mut iter = 0;
        while rr.sqrt() > CG_TOL * bnorm.max(f64::MIN_POSITIVE) {
            if iter > 10 * len {
                return Err(Error::Solver(format!("CG did not converge at step {step}")));
            }
            laplacian(&p, nx, ny, dx, dy, &mut ap);
            for k in 0..len {
                ap[k] = p[k] - r * ap[k];
            }
            let a = rr / dot(&p, &ap);
            for k in 0..len {
                u[k] += a * p[k];
                res[k] -= a * ap[k];
            }
            let rr_new = dot(&res, &res);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..len {
                p[k] = res[k] + beta * p[k];
            }
            iter += 1;
        }
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !sup.is_finite() || sup > BLOWUP_FACTOR * sup0.max(f64::MIN_POSITIVE) && sup0 > 0.0 {
            return Err(Error::Solver(format!(
                "heat2d solution blew up at step {step}: sup {sup} vs initial {sup0}"
            )));
        }
    }
    Ok(u)
}

fn bilinear(u: &[f64], nx: usize, ny: usize, x: f64, y: f64) -> f64 {
    let mx = nx - 1;
    let node = |i: usize, j: usize| -> f64 {
        if i == 0 || j == 0 || i == nx || j == ny {
            0.0
        } else {
            u[(j - 1) * mx + (i - 1)]
        }
    };
    let sx = (x.clamp(0.0, 1.0) * nx as f64).min(nx as f64 - 1e-12);
    let sy = (y.clamp(0.0, 1.0) * ny as f64).min(ny as f64 - 1e-12);
    let (i, j) = (sx.floor() as usize, sy.floor() as usize);
    let (wx, wy) = (sx - i as f64, sy - j as f64);
    (1.0 - wx) * (1.0 - wy) * node(i, j)
        + wx * (1.0 - wy) * node(i + 1, j)
        + (1.0 - wx) * wy * node(i, j + 1)
        + wx * wy * node(i + 1, j + 1)
}

/// Numerical observables and `K̂₀ = max_j |numeric − exact|`.
///
/// The number of time steps is `⌈t1/dt⌉`, with the step shortened so the
/// last one lands on `t1`.
pub fn heat2d_numeric(
    b: f64,
    c: f64,
    params: &Heat2dParams,
    (dx, dy, dt): (f64, f64, f64),
) -> Result<(Vec<f64>, f64)> {
    let (nx, ny) = (cells(dx)?, cells(dy)?);
    if !(dt > 0.0) {
        return Err(contract("time step must be positive"));
    }
    let steps = ((params.t1 / dt) - 1e-9).ceil().max(1.0) as usize;
    let dt_eff = params.t1 / steps as f64;
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut init = Vec::with_capacity((nx - 1) * (ny - 1));
    for j in 1..ny {
        for i in 1..nx {
            init.push(heat2d_exact(b, c, params.alpha, i as f64 * hx, j as f64 * hy, 0.0));
        }
    }
    let u = crank_nicolson(&init, (nx, ny), (hx, hy), params.alpha, dt_eff, steps)?;
    let eta: Vec<f64> = params
        .observations
        .iter()
        .map(|&(x, y)| bilinear(&u, nx, ny, x, y))
        .collect();
    let exact = params.exact(b, c);
    let err = eta
        .iter()
        .zip(&exact)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max);
    Ok((eta, err))
}

type MeshKey = (u64, u64, u64);

/// θ = (b, c). The solver is linear in θ, so the two unit solves are cached
/// per mesh and combined.
#[derive(Debug)]
pub struct Heat2dForward {
    params: Heat2dParams,
    cache: Mutex<BTreeMap<MeshKey, (Vec<f64>, Vec<f64>)>>,
}

impl Heat2dForward {
    pub fn new(params: Heat2dParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn params(&self) -> &Heat2dParams {
        &self.params
    }

    fn basis(&self, mesh: (f64, f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
        let key = (mesh.0.to_bits(), mesh.1.to_bits(), mesh.2.to_bits());
        let mut cache = self.cache.lock().expect("heat2d cache poisoned");
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let (u1, _) = heat2d_numeric(1.0, 0.0, &self.params, mesh)?;
        let (u2, _) = heat2d_numeric(0.0, 1.0, &self.params, mesh)?;
        cache.insert(key, (u1.clone(), u2.clone()));
        Ok((u1, u2))
    }
}

impl ForwardMap for Heat2dForward {
    fn observation_count(&self) -> usize {
        self.params.observations.len()
    }

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve> {
        let [b, c] = theta else {
            return Err(contract(format!("heat2d expects (b, c), got {} values", theta.len())));
        };
        let exact = self.params.exact(*b, *c);
        match *discretization {
            Discretization::Exact => Ok(ForwardSolve::exact(exact)),
            Discretization::Mesh { dx, dy, dt } => {
                let (u1, u2) = self.basis((dx, dy, dt))?;
                let eta: Vec<f64> = u1.iter().zip(&u2).map(|(p, q)| b * p + c * q).collect();
                let err = eta
                    .iter()
                    .zip(&exact)
                    .map(|(a, e)| (a - e).abs())
                    .fold(0.0, f64::max);
                Ok(ForwardSolve {
                    eta,
                    error_estimate: err,
                    discretization: *discretization,
                })
            }
            other => Err(contract(format!("heat2d does not support {other}"))),
        }
    }
}
