//! P1 finite elements for `−(a u′)′ = f` on `(0, 1)`, `u(0) = u(1) = 0`,
//! with the element-wise residual estimator
//! `K̂₀ = max_i h²/(π² a_min,i) ‖f + a′ u_h′‖_{L₂(I_i)}`.

use std::f64::consts::PI;

use super::{Discretization, ForwardMap, ForwardSolve, NaturalCubicSpline};
use crate::error::{contract, Error, Result};

const GAUSS_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Fem1dSolution {
    /// Nodal values including both boundary zeros.
    pub u: Vec<f64>,
    pub element_estimates: Vec<f64>,
    pub estimate: f64,
}

impl Fem1dSolution {
    pub fn elements(&self) -> usize {
        self.u.len() - 1
    }

    /// Piecewise-linear interpolant at `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.elements();
        let s = (x.clamp(0.0, 1.0) * n as f64).min(n as f64 - 1e-12);
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }
}

fn gauss<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS)
        .map(|(&t, w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// `a` returns `(a(x), a′(x))`.
pub fn fem1d_heat_solve<A, F>(a: A, f: F, n: usize) -> Result<Fem1dSolution>
where
    A: Fn(f64) -> (f64, f64),
    F: Fn(f64) -> f64,
{
    if n < 2 {
        return Err(contract(format!("need at least 2 elements, got {n}")));
    }
    let h = 1.0 / n as f64;
    let node = |i: usize| i as f64 * h;

    let mut a_int = vec![0.0; n];
    let mut a_min = vec![f64::INFINITY; n];
    for e in 0..n {
        let (lo, hi) = (node(e), node(e + 1));
        for j in 0..MIN_SAMPLES {
            let x = lo + (hi - lo) * j as f64 / (MIN_SAMPLES - 1) as f64;
            a_min[e] = a_min[e].min(a(x).0);
        }
        for &t in &GAUSS_NODES {
            a_min[e] = a_min[e].min(a(0.5 * (lo + hi) + 0.5 * h * t).0);
        }
        if !(a_min[e] > 0.0) || !a_min[e].is_finite() {
            return Err(Error::Solver(format!(
                "conductivity must be positive, found {} on element {e}",
                a_min[e]
            )));
        }
        a_int[e] = gauss(lo, hi, |x| a(x).0);
    }

    // Interior unknowns 1..n-1; row i couples elements i-1 and i.
    let k = n - 1;
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    let mut rhs = vec![0.0; k];
    for i in 1..n {
        diag[i - 1] = (a_int[i - 1] + a_int[i]) / (h * h);
        if i < n - 1 {
            off[i - 1] = -a_int[i] / (h * h);
        }
        let left = gauss(node(i - 1), node(i), |x| f(x) * (x - node(i - 1)) / h);
        let right = gauss(node(i), node(i + 1), |x| f(x) * (node(i + 1) - x) / h);
        rhs[i - 1] = left + right;
    }
    // Thomas algorithm; the matrix is symmetric positive definite.
    for i in 1..k {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
        if !(diag[i] > 0.0) {
            return Err(Error::Solver("stiffness matrix is singular".into()));
        }
    }
    let mut u = vec![0.0; n + 1];
    u[k] = rhs[k - 1] / diag[k - 1];
    for i in (1..k).rev() {
        u[i] = (rhs[i - 1] - off[i - 1] * u[i + 1]) / diag[i - 1];
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite finite element solution".into()));
    }

    let mut element_estimates = Vec::with_capacity(n);
    for e in 0..n {
        let du = (u[e + 1] - u[e]) / h;
        let r2 = gauss(node(e), node(e + 1), |x| {
            let r = f(x) + a(x).1 * du;
            r * r
        });
        element_estimates.push(h * h / (PI * PI * a_min[e]) * r2.sqrt());
    }
    let estimate = element_estimates.iter().copied().fold(0.0, f64::max);
    Ok(Fem1dSolution {
        u,
        element_estimates,
        estimate,
    })
}

/// Conductivity `a = exp(b)` with `b` the natural cubic spline through knot
/// values on a uniform grid; forcing `sin(πx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heat1dForward {
    knots: Vec<f64>,
    design: Vec<f64>,
}

impl Heat1dForward {
    pub fn new(n_knots: usize, design: Vec<f64>) -> Result<Self> {
        if n_knots < 2 {
            return Err(contract("need at least two spline knots"));
        }
        let knots = (0..n_knots).map(|i| i as f64 / (n_knots - 1) as f64).collect();
        Ok(Self { knots, design })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }

    pub fn log_conductivity(&self, theta: &[f64]) -> Result<NaturalCubicSpline> {
        if theta.len() != self.knots.len() {
            return Err(contract(format!(
                "expected {} knot values, got {}",
                self.knots.len(),
                theta.len()
            )));
        }
        NaturalCubicSpline::new(self.knots.clone(), theta.to_vec())
    }
}

pub(crate) fn heat_forcing(x: f64) -> f64 {
    (PI * x).sin()
}

impl ForwardMap for Heat1dForward {
    fn observation_count(&self) -> usize {
        self.design.len()
    }

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve> {
        let Discretization::Elements { n } = *discretization else {
            return Err(contract(format!("heat1d does not support {discretization}")));
        };
        let spline = self.log_conductivity(theta)?;
        let sol = fem1d_heat_solve(
            |x| {
                let (s, ds) = spline.eval(x);
                let a = s.exp();
                (a, a * ds)
            },
            heat_forcing,
            n,
        )?;
        Ok(ForwardSolve {
            eta: self.design.iter().map(|&x| sol.eval(x)).collect(),
            error_estimate: sol.estimate,
            discretization: *discretization,
        })
    }
}
