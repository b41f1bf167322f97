//! EABF-derived forward-map error tolerances.
//!
//! For independent location-scale data the expected absolute Bayes factor
//! between the numerical and exact posteriors obeys
//! `EABF < ρ(0)·K·m/σ + ‖π_k − π‖_TV`, where `K` bounds the forward-map error
//! at the observation points. Keeping `EABF < b` therefore needs
//! `K < (σ/m)(b − tail)/ρ(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Default EABF threshold, 1/20.
pub const DEFAULT_B: f64 = 0.05;
/// Default target for the prior-truncation tail mass.
pub const DEFAULT_TAIL_TARGET: f64 = 0.01;

/// Strict upper tolerance `K = (σ/m)(b − tail)/ρ(0)`.
pub fn fm_tolerance(sigma: f64, m: usize, b: f64, tail: f64, rho0: f64) -> Result<f64> {
    if !(sigma > 0.0) || m == 0 || !(rho0 > 0.0) {
        return Err(contract(format!(
            "need sigma > 0, m >= 1, rho0 > 0 (got {sigma}, {m}, {rho0})"
        )));
    }
    if !(b > 0.0 && b <= 1.0) || !(tail >= 0.0) {
        return Err(contract(format!("need 0 < b <= 1 and tail >= 0 (got {b}, {tail})")));
    }
    if tail >= b {
        return Err(Error::InfeasibleBudget { tail, b });
    }
    Ok(sigma / m as f64 * (b - tail) / rho0)
}

/// `ρ(0)·K·m/σ + tail`, the EABF bound for a forward-map error `K`.
pub fn eabf_bound(fm_error: f64, sigma: f64, m: usize, rho0: f64, tail: f64) -> f64 {
    rho0 * fm_error * m as f64 / sigma + tail
}

/// Absolute Bayes factor `½|Z_k/Z − 1|`.
pub fn abf(zk: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !(zk >= 0.0) {
        return Err(contract(format!("need Z > 0 and Z_k >= 0 (got {z}, {zk})")));
    }
    Ok(0.5 * (zk / z - 1.0).abs())
}

/// A resolved error budget for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub b: f64,
    pub tail: f64,
    pub sigma: f64,
    pub m: usize,
    pub rho0: f64,
    /// `(σ/m)(b − tail)/ρ(0)`.
    pub k: f64,
    /// Multiplier applied to `k` when checking solver estimates.
    pub safety: f64,
}

impl ErrorBudget {
    pub fn new(sigma: f64, m: usize, b: f64, tail: f64, rho0: f64) -> Result<Self> {
        Ok(Self {
            b,
            tail,
            sigma,
            m,
            rho0,
            k: fm_tolerance(sigma, m, b, tail, rho0)?,
            safety: 1.0,
        })
    }

    pub fn with_safety(mut self, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(contract(format!("safety factor must lie in (0, 1], got {safety}")));
        }
        self.safety = safety;
        Ok(self)
    }

    /// Tolerance a solver estimate is checked against.
    pub fn tolerance(&self) -> f64 {
        self.k * self.safety
    }

    /// EABF bound implied by an achieved forward-map error.
    pub fn eabf_for(&self, fm_error: f64) -> f64 {
        eabf_bound(fm_error, self.sigma, self.m, self.rho0, self.tail)
    }
}

/// One line of the budget audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAudit {
    pub run: String,
    pub b: f64,
    pub tail: f64,
    pub sigma: f64,
    pub m: usize,
    pub rho0: f64,
    pub k: f64,
    pub tolerance: f64,
    pub solver_calls: u64,
    pub worst_estimate: f64,
    pub eabf_bound: f64,
    /// Worst estimate came within 10% of the tolerance.
    pub thin_margin: bool,
}

impl BudgetAudit {
    pub fn new(run: impl Into<String>, budget: &ErrorBudget, solver_calls: u64, worst_estimate: f64) -> Self {
        Self {
            run: run.into(),
            b: budget.b,
            tail: budget.tail,
            sigma: budget.sigma,
            m: budget.m,
            rho0: budget.rho0,
            k: budget.k,
            tolerance: budget.tolerance(),
            solver_calls,
            worst_estimate,
            eabf_bound: budget.eabf_for(worst_estimate),
            thin_margin: worst_estimate > 0.9 * budget.tolerance(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RHO0: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn heat_examples_reproduce_quoted_tolerances() {
        let k1 = fm_tolerance(0.0005, 30, 0.05, 0.0, RHO0).unwrap();
        assert!((2.08e-6..=2.10e-6).contains(&k1), "{k1}");
        let k2 = fm_tolerance(0.3, 25, 0.05, 0.0, RHO0).unwrap();
        assert!((0.00150..=0.00151).contains(&k2), "{k2}");
    }

    #[test]
    fn exhausted_budget_is_infeasible() {
        assert!(matches!(
            fm_tolerance(1.0, 1, 0.05, 0.05, RHO0),
            Err(Error::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn exact_solver_and_exact_prior_give_zero() {
        assert_eq!(eabf_bound(0.0, 0.3, 10, RHO0, 0.0), 0.0);
    }

    #[test]
    fn abf_arithmetic() {
        assert_eq!(abf(2.0, 2.0).unwrap(), 0.0);
        assert!((abf(1.1, 1.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(abf(1.0, 0.0).is_err());
    }

    #[test]
    fn safety_factor_scales_tolerance() {
        let b = ErrorBudget::new(0.3, 25, 0.05, 0.0, RHO0).unwrap().with_safety(0.5).unwrap();
        assert!((b.tolerance() - 0.5 * b.k).abs() < 1e-18);
        assert!(ErrorBudget::new(0.3, 25, 0.05, 0.0, RHO0).unwrap().with_safety(1.5).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_recovers_threshold(
            sigma in 1e-4f64..10.0, m in 1usize..500, b in 0.01f64..1.0, frac in 0.0f64..0.99
        ) {
            let tail = b * frac;
            let k = fm_tolerance(sigma, m, b, tail, RHO0).unwrap();
            let back = eabf_bound(k, sigma, m, RHO0, tail);
            prop_assert!((back - b).abs() <= 1e-14 * b.max(1.0));
        }

        #[test]
        fn tolerance_is_homogeneous(sigma in 1e-4f64..10.0, m in 1usize..500, b in 0.01f64..1.0) {
            let k = fm_tolerance(sigma, m, b, 0.0, RHO0).unwrap();
            let k_sigma = fm_tolerance(2.0 * sigma, m, b, 0.0, RHO0).unwrap();
            let k_m = fm_tolerance(sigma, 2 * m, b, 0.0, RHO0).unwrap();
            prop_assert!((k_sigma - 2.0 * k).abs() <= 1e-14 * k);
            prop_assert!((k_m - 0.5 * k).abs() <= 1e-14 * k);
        }

        #[test]
        fn bound_is_monotone(
            e in 0.0f64..1.0, sigma in 0.01f64..10.0, m in 1usize..100, tail in 0.0f64..0.5, d in 0.0f64..1.0
        ) {
            let base = eabf_bound(e, sigma, m, RHO0, tail);
            prop_assert!(eabf_bound(e + d, sigma, m, RHO0, tail) >= base);
            prop_assert!(eabf_bound(e, sigma, m + 1, RHO0, tail) >= base);
            prop_assert!(eabf_bound(e, sigma, m, RHO0, tail + d) >= base);
            prop_assert!(eabf_bound(e, sigma + d, m, RHO0, tail) <= base);
        }
    }
}
