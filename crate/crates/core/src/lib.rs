//! Forward-map error budgets for Bayesian inverse problems.
//!
//! The crate bounds the expected absolute Bayes factor (EABF) between a
//! numerical posterior and the theoretical one, and turns that bound into a
//! sup-norm tolerance for the forward-map solver. Around that core it ships:
//!
//! * [`obs`]: location-scale observation models and likelihoods;
//! * [`priors`]: series priors with random truncation, coefficient and
//!   dimension priors, and a box-truncated GMRF;
//! * [`budget`]: the tolerance `K = (σ/m)(b − tail)/ρ(0)` and EABF bounds;
//! * [`forward`]: forward maps with after-the-fact error estimates and a
//!   refinement controller;
//! * [`samplers`]: Metropolis kernels, reversible-jump moves and chain
//!   diagnostics;
//! * [`conjugate`]: exact Gaussian linear model evidences;
//! * [`verify`]: grid-quadrature posteriors and empirical checks of the
//!   total-variation convergence rates;
//! * [`experiments`]: the four worked examples and the rate harness.

pub mod budget;
pub mod conjugate;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod obs;
pub mod priors;
pub mod samplers;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
