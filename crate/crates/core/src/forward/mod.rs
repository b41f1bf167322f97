//! Forward maps with after-the-fact error estimates, and the refinement
//! controller that drives them to an error budget.

mod deconv;
mod fem1d;
mod heat2d;
mod spline;
mod wave;

pub use deconv::{convolve_analytic, convolve_simpson, DeconvForward};
pub(crate) use fem1d::heat_forcing;
pub use fem1d::{fem1d_heat_solve, Fem1dSolution, Heat1dForward};
pub use heat2d::{crank_nicolson, heat2d_exact, heat2d_numeric, Heat2dForward, Heat2dParams};
pub use spline::NaturalCubicSpline;
pub use wave::{wave_fm, WaveForward};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::special::hash_params;

/// Discretization used for one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discretization {
    /// Closed-form forward map; no discretization error.
    Exact,
    /// Composite quadrature with `n` subintervals.
    Grid { n: usize },
    /// Finite elements on `n` uniform elements.
    Elements { n: usize },
    /// Space-time mesh.
    Mesh { dx: f64, dy: f64, dt: f64 },
}

impl std::fmt::Display for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Discretization::Exact => write!(f, "exact"),
            Discretization::Grid { n } => write!(f, "grid n={n}"),
            Discretization::Elements { n } => write!(f, "elements n={n}"),
            Discretization::Mesh { dx, dy, dt } => write!(f, "mesh dx={dx} dy={dy} dt={dt}"),
        }
    }
}

/// Predicted observables with the solver's own bound on their error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSolve {
    pub eta: Vec<f64>,
    /// K̂₀: sup over observation functionals of the estimated error.
    pub error_estimate: f64,
    pub discretization: Discretization,
}

impl ForwardSolve {
    pub fn exact(eta: Vec<f64>) -> Self {
        Self {
            eta,
            error_estimate: 0.0,
            discretization: Discretization::Exact,
        }
    }
}

pub trait ForwardMap: Send + Sync {
    fn observation_count(&self) -> usize;

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve>;
}

impl<F: ForwardMap + ?Sized> ForwardMap for &F {
    fn observation_count(&self) -> usize {
        (**self).observation_count()
    }

    fn solve(&self, theta: &[f64], discretization: &Discretization) -> Result<ForwardSolve> {
        (**self).solve(theta, discretization)
    }
}

/// Maps a refinement level (0 = initial) to a discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RefinementRule {
    /// One discretization only.
    Fixed { discretization: Discretization },
    /// `n = initial + level·step` elements.
    AddElements { initial: usize, step: usize },
    /// `n = initial·2^level` quadrature subintervals.
    DoubleGrid { initial: usize },
    /// `(dx, dy, dt)/2^level`.
    HalveMesh { dx: f64, dy: f64, dt: f64 },
}

impl RefinementRule {
    pub fn at(&self, level: usize) -> Discretization {
        match *self {
            RefinementRule::Fixed { discretization } => discretization,
            RefinementRule::AddElements { initial, step } => Discretization::Elements {
                n: initial + level * step,
            },
            RefinementRule::DoubleGrid { initial } => Discretization::Grid {
                n: initial << level,
            },
            RefinementRule::HalveMesh { dx, dy, dt } => {
                let f = 0.5f64.powi(level as i32);
                Discretization::Mesh {
                    dx: dx * f,
                    dy: dy * f,
                    dt: dt * f,
                }
            }
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, RefinementRule::Fixed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementPolicy {
    pub rule: RefinementRule,
    pub max_refinements: usize,
}

impl RefinementPolicy {
    pub fn exact() -> Self {
        Self {
            rule: RefinementRule::Fixed {
                discretization: Discretization::Exact,
            },
            max_refinements: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.rule {
            RefinementRule::Fixed { .. } => true,
            RefinementRule::AddElements { initial, step } => initial >= 2 && step >= 1,
            RefinementRule::DoubleGrid { initial } => initial >= 2 && initial % 2 == 0,
            RefinementRule::HalveMesh { dx, dy, dt } => dx > 0.0 && dy > 0.0 && dt > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid refinement rule {:?}", self.rule)))
        }
    }
}

/// Outcome of [`solve_to_budget`].
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetedSolve {
    pub solve: ForwardSolve,
    pub level: usize,
    /// `(level, K̂₀)` for every attempt, in order.
    pub history: Vec<(usize, f64)>,
}

/// Solves at successively finer discretizations, starting from level 0,
/// until the error estimate is within `tolerance`.
pub fn solve_to_budget<F: ForwardMap + ?Sized>(
    fm: &F,
    theta: &[f64],
    tolerance: f64,
    policy: &RefinementPolicy,
) -> Result<BudgetedSolve> {
    solve_from_level(fm, theta, tolerance, policy, 0)
}

fn solve_from_level<F: ForwardMap + ?Sized>(
    fm: &F,
    theta: &[f64],
    tolerance: f64,
    policy: &RefinementPolicy,
    start: usize,
) -> Result<BudgetedSolve> {
    if !(tolerance > 0.0) {
        return Err(contract(format!("tolerance must be positive, got {tolerance}")));
    }
    let mut history = Vec::new();
    let mut level = start;
    loop {
        let solve = fm.solve(theta, &policy.rule.at(level))?;
        let estimate = solve.error_estimate;
        if !(estimate >= 0.0 && estimate.is_finite()) {
            return Err(Error::Solver(format!("invalid error estimate {estimate}")));
        }
        if let Some(&(_, previous)) = history.last() {
            if estimate > previous && estimate > tolerance {
                return Err(Error::NonMonotoneRefinement {
                    level,
                    previous,
                    current: estimate,
                });
            }
        }
        history.push((level, estimate));
        if estimate <= tolerance {
            return Ok(BudgetedSolve {
                solve,
                level,
                history,
            });
        }
        if policy.rule.is_fixed() || level >= policy.max_refinements {
            let best_estimate = history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
            return Err(Error::RefinementExhausted {
                refinements: level,
                best_estimate,
                tolerance,
            });
        }
        level += 1;
    }
}

/// One line of the refinement audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub call: u64,
    pub theta_hash: String,
    pub level: usize,
    pub discretization: Discretization,
    pub estimate: f64,
    pub accepted: bool,
}

/// Per-chain refinement controller.
///
/// Keeps the current level across calls and never coarsens. Every solve is
/// checked against the tolerance; calls that needed refinement are always
/// logged, other calls every `audit_stride` calls.
#[derive(Debug)]
pub struct AdaptiveSolver<F> {
    fm: F,
    policy: RefinementPolicy,
    tolerance: f64,
    level: usize,
    calls: u64,
    worst_estimate: f64,
    audit_stride: u64,
    audit: Vec<RefinementRecord>,
}

impl<F: ForwardMap> AdaptiveSolver<F> {
    pub fn new(fm: F, policy: RefinementPolicy, tolerance: f64) -> Result<Self> {
        policy.validate()?;
        if !(tolerance > 0.0) {
            return Err(contract(format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(Self {
            fm,
            policy,
            tolerance,
            level: 0,
            calls: 0,
            worst_estimate: 0.0,
            audit_stride: 1,
            audit: Vec::new(),
        })
    }

    pub fn with_audit_stride(mut self, stride: u64) -> Self {
        self.audit_stride = stride.max(1);
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn discretization(&self) -> Discretization {
        self.policy.rule.at(self.level)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Largest accepted K̂₀ so far.
    pub fn worst_estimate(&self) -> f64 {
        self.worst_estimate
    }

    pub fn audit(&self) -> &[RefinementRecord] {
        &self.audit
    }

    pub fn forward_map(&self) -> &F {
        &self.fm
    }

    pub fn solve(&mut self, theta: &[f64]) -> Result<ForwardSolve> {
        self.calls += 1;
        let out = solve_from_level(&self.fm, theta, self.tolerance, &self.policy, self.level)?;
        let refined = out.history.len() > 1;
        if refined || (self.calls - 1) % self.audit_stride == 0 {
            let hash = format!("{:016x}", hash_params(theta));
            let last = out.history.len() - 1;
            for (i, &(level, estimate)) in out.history.iter().enumerate() {
                self.audit.push(RefinementRecord {
                    call: self.calls,
                    theta_hash: hash.clone(),
                    level,
                    discretization: self.policy.rule.at(level),
                    estimate,
                    accepted: i == last,
                });
            }
        }
        self.level = out.level;
        self.worst_estimate = self.worst_estimate.max(out.solve.error_estimate);
        Ok(out.solve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Error estimate `c / n` on an element count; exact η = θ.
    struct Toy {
        c: f64,
    }

    impl ForwardMap for Toy {
        fn observation_count(&self) -> usize {
            1
        }

        fn solve(&self, theta: &[f64], d: &Discretization) -> Result<ForwardSolve> {
            let n = match d {
                Discretization::Elements { n } => *n as f64,
                _ => unreachable!(),
            };
            Ok(ForwardSolve {
                eta: vec![theta[0]],
                error_estimate: self.c * theta[0].abs() / n,
                discretization: *d,
            })
        }
    }

    fn policy(max: usize) -> RefinementPolicy {
        RefinementPolicy {
            rule: RefinementRule::AddElements { initial: 10, step: 10 },
            max_refinements: max,
        }
    }

    #[test]
    fn exact_map_returns_immediately() {
        let fm = WaveForward::new(vec![0.25, 0.5]);
        let out = solve_to_budget(&fm, &[1.0, 2.0], 1e-12, &RefinementPolicy::exact()).unwrap();
        assert_eq!(out.solve.error_estimate, 0.0);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn refines_until_within_tolerance() {
        let out = solve_to_budget(&Toy { c: 1.0 }, &[1.0], 0.03, &policy(10)).unwrap();
        // 1/10, 1/20, 1/30, 1/40 -> first <= 0.03 is n = 40
        assert_eq!(out.solve.discretization, Discretization::Elements { n: 40 });
        assert_eq!(out.level, 3);
        assert!(out.solve.error_estimate <= 0.03);
    }

    #[test]
    fn exhaustion_reports_best_estimate() {
        match solve_to_budget(&Toy { c: 1.0 }, &[1.0], 1e-4, &policy(2)) {
            Err(Error::RefinementExhausted { best_estimate, refinements, .. }) => {
                assert_eq!(refinements, 2);
                assert!((best_estimate - 1.0 / 30.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn controller_never_coarsens() {
        let mut ctl = AdaptiveSolver::new(Toy { c: 1.0 }, policy(20), 0.03).unwrap();
        ctl.solve(&[1.0]).unwrap();
        assert_eq!(ctl.level(), 3);
        let s = ctl.solve(&[0.01]).unwrap();
        assert_eq!(s.discretization, Discretization::Elements { n: 40 });
        ctl.solve(&[2.0]).unwrap();
        assert_eq!(ctl.level(), 6);
        assert!(ctl.audit().iter().filter(|r| r.accepted).all(|r| r.estimate <= 0.03));
        assert!(ctl.worst_estimate() <= 0.03);
    }

    #[test]
    fn halving_rule_levels() {
        let rule = RefinementRule::HalveMesh { dx: 0.1, dy: 0.1, dt: 0.268 };
        assert_eq!(rule.at(2), Discretization::Mesh { dx: 0.025, dy: 0.025, dt: 0.067 });
        assert_eq!(RefinementRule::DoubleGrid { initial: 4 }.at(3), Discretization::Grid { n: 32 });
    }
}
