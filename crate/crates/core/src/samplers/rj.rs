//! Birth/death moves between nested coefficient dimensions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{checked, Walker};
use crate::error::{Error, Result};
use crate::priors::DimPrior;
use crate::special::{std_normal, LN_SQRT_2PI};

const SCALE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RjConfig {
    /// Coefficients added or removed per move (2 for cosine/sine pairs).
    pub step: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Probability that an iteration attempts a dimension move.
    #[serde(default = "default_jump_prob")]
    pub jump_prob: f64,
    /// Birth proposal scale when there is no reference coefficient.
    #[serde(default = "default_base_scale")]
    pub base_scale: f64,
}

fn default_jump_prob() -> f64 {
    0.2
}

fn default_base_scale() -> f64 {
    0.25
}

impl RjConfig {
    pub fn new(dim_prior: &DimPrior, k_max: usize, step: usize) -> Self {
        Self {
            step,
            k_min: dim_prior.min_support(),
            k_max,
            jump_prob: default_jump_prob(),
            base_scale: default_base_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step == 0
            || self.k_min > self.k_max
            || !(0.0..=1.0).contains(&self.jump_prob)
            || !(self.base_scale > 0.0)
        {
            return Err(Error::Config(format!("invalid jump configuration {self:?}")));
        }
        Ok(())
    }

    /// Proposal sd for new coordinate `i` given the retained coordinates:
    /// `|β_{i−step}|/4`, or `|β₀|/4` for the first block, floored.
    fn scale(&self, base: &[f64], i: usize) -> f64 {
        let reference = if i >= self.step {
            Some(i - self.step)
        } else if !base.is_empty() {
            Some(0)
        } else {
            None
        };
        match reference {
            Some(j) => (base[j].abs() / 4.0).max(SCALE_FLOOR),
            None => self.base_scale,
        }
    }

    fn log_q(&self, base: &[f64], new: &[f64]) -> f64 {
        new.iter()
            .enumerate()
            .map(|(k, &u)| {
                let s = self.scale(base, base.len() + k);
                -0.5 * (u / s).powi(2) - s.ln() - LN_SQRT_2PI
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpOutcome {
    Birth { accepted: bool },
    Death { accepted: bool },
}

impl JumpOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            JumpOutcome::Birth { .. } => "birth",
            JumpOutcome::Death { .. } => "death",
        }
    }

    pub fn accepted(&self) -> bool {
        match *self {
            JumpOutcome::Birth { accepted } | JumpOutcome::Death { accepted } => accepted,
        }
    }
}

/// One birth or death attempt, each chosen with probability ½.
///
/// `walker.log_post` must include `ln h(ℓ)`; `log_target` excludes it. Moves
/// leaving `[k_min, k_max]` are rejected. The map is the identity on retained
/// coordinates, so the Jacobian is 1.
pub fn rj_step<R, F>(
    walker: &mut Walker,
    cfg: &RjConfig,
    dim_prior: &DimPrior,
    log_target: &mut F,
    rng: &mut R,
) -> Result<JumpOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let l = walker.x.len();
    if rng.random::<bool>() {
        let l_new = l + cfg.step;
        if l_new > cfg.k_max {
            return Ok(JumpOutcome::Birth { accepted: false });
        }
        let new: Vec<f64> = (l..l_new)
            .map(|i| cfg.scale(&walker.x, i) * std_normal(rng))
            .collect();
        let log_q = cfg.log_q(&walker.x, &new);
        let mut y = walker.x.clone();
        y.extend_from_slice(&new);
        let accepted = accept(walker, y, -log_q, dim_prior, log_target, rng)?;
        Ok(JumpOutcome::Birth { accepted })
    } else {
        if l < cfg.step || l - cfg.step < cfg.k_min {
            return Ok(JumpOutcome::Death { accepted: false });
        }
        let l_new = l - cfg.step;
        let y = walker.x[..l_new].to_vec();
        let log_q = cfg.log_q(&y, &walker.x[l_new..]);
        let accepted = accept(walker, y, log_q, dim_prior, log_target, rng)?;
        Ok(JumpOutcome::Death { accepted })
    }
}

fn accept<R, F>(
    walker: &mut Walker,
    y: Vec<f64>,
    log_q_ratio: f64,
    dim_prior: &DimPrior,
    log_target: &mut F,
    rng: &mut R,
) -> Result<bool>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let lp = checked(log_target, &y)? + dim_prior.ln_pmf(y.len());
    if lp == f64::NEG_INFINITY {
        return Ok(false);
    }
    let u: f64 = rng.random();
    if u.ln() < lp - walker.log_post + log_q_ratio {
        walker.x = y;
        walker.log_post = lp;
        Ok(true)
    } else {
        Ok(false)
    }
}
