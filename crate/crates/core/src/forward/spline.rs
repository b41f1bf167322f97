//! Natural cubic interpolating spline.

use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(contract("spline needs at least two knots and matching values"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(contract("spline knots must be strictly increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = xs[i + 1] - xs[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { xs, ys, m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    /// Value and first derivative at `x` (linear extrapolation of the end cubics).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let value = a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (self.ys[i + 1] - self.ys[i]) / h
            + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (value, slope)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}
