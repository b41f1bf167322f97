//! Metropolis–Hastings kernels, reversible-jump dimension moves, chain
//! storage and diagnostics.

mod chain;
mod diagnostics;
mod rj;

pub use chain::{Chain, MoveStats};
pub use diagnostics::{ess, hist_tv, iat};
pub use rj::{rj_step, JumpOutcome, RjConfig};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::priors::DimPrior;
use crate::special::std_normal;

/// Current point of a chain and its log target density.
#[derive(Debug, Clone, PartialEq)]
pub struct Walker {
    pub x: Vec<f64>,
    pub log_post: f64,
}

impl Walker {
    pub fn new<F>(x: Vec<f64>, log_target: &mut F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let log_post = checked(log_target, &x)?;
        if !log_post.is_finite() {
            return Err(contract(format!("initial state has log density {log_post}")));
        }
        Ok(Self { x, log_post })
    }
}

pub(crate) fn checked<F>(log_target: &mut F, x: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let v = log_target(x)?;
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::NanTarget { state: x.to_vec() });
    }
    Ok(v)
}

/// Metropolis–Hastings accept/reject of `proposal`. `log_q_ratio` is
/// `ln q(x | x′) − ln q(x′ | x)`, zero for symmetric proposals.
pub fn mh_step<R, F>(
    walker: &mut Walker,
    proposal: Vec<f64>,
    log_q_ratio: f64,
    log_target: &mut F,
    rng: &mut R,
) -> Result<bool>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let lp = checked(log_target, &proposal)?;
    if lp == f64::NEG_INFINITY {
        return Ok(false);
    }
    let log_ratio = lp - walker.log_post + log_q_ratio;
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        walker.x = proposal;
        walker.log_post = lp;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Within-dimension proposal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// Gaussian random walk, either on all coordinates at once or on one
    /// uniformly chosen coordinate.
    RandomWalk { scale: f64, single_site: bool },
    /// Two-walker affine-invariant stretch move, mixed with a random walk on
    /// the primary walker with probability `random_walk_prob`. The stretch
    /// move alone keeps the walkers' difference direction fixed, so the
    /// fallback is what makes the kernel irreducible.
    PairStretch {
        a: f64,
        random_walk_prob: f64,
        scale: f64,
    },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::RandomWalk { scale, .. } => scale >= 0.0 && scale.is_finite(),
            Kernel::PairStretch {
                a,
                random_walk_prob,
                scale,
            } => a > 1.0 && (0.0..=1.0).contains(&random_walk_prob) && random_walk_prob > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid kernel {self:?}")))
        }
    }
}

/// Settings of one chain run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub iterations: u64,
    pub burn_in: u64,
    #[serde(default = "one")]
    pub thin: u64,
    /// Robbins–Monro tuning of per-coordinate random-walk scales during burn-in.
    #[serde(default)]
    pub adapt: bool,
}

fn one() -> u64 {
    1
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.iterations <= self.burn_in {
            return Err(Error::Config(
                "need thin >= 1 and more iterations than burn-in".into(),
            ));
        }
        Ok(())
    }
}

const RW_TARGET_BLOCK: f64 = 0.234;
const RW_TARGET_SITE: f64 = 0.44;

/// Within-dimension sampler state: the kernel, per-coordinate scales and the
/// companion walker of the pair move.
#[derive(Debug, Clone)]
pub struct Metropolis {
    kernel: Kernel,
    log_scales: Vec<f64>,
    site_visits: Vec<u64>,
    companion: Option<Walker>,
}

impl Metropolis {
    pub fn new(kernel: Kernel, max_dim: usize) -> Result<Self> {
        kernel.validate()?;
        let s = match kernel {
            Kernel::RandomWalk { scale, .. } | Kernel::PairStretch { scale, .. } => scale,
        };
        Ok(Self {
            kernel,
            log_scales: vec![s.ln(); max_dim.max(1)],
            site_visits: vec![0; max_dim.max(1)],
            companion: None,
        })
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scales.iter().map(|v| v.exp()).collect()
    }

    fn scale(&self, i: usize) -> f64 {
        self.log_scales[i.min(self.log_scales.len() - 1)].exp()
    }

    /// One within-dimension update. Returns the move name and whether it was
    /// accepted.
    pub fn step<R, F>(
        &mut self,
        walker: &mut Walker,
        log_target: &mut F,
        rng: &mut R,
        adapt: bool,
    ) -> Result<(&'static str, bool)>
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let d = walker.x.len();
        if d == 0 {
            return Ok(("random_walk", true));
        }
        match self.kernel {
            Kernel::RandomWalk { single_site, .. } => {
                let acc = self.random_walk(walker, log_target, rng, single_site, adapt)?;
                Ok(("random_walk", acc))
            }
            Kernel::PairStretch {
                a, random_walk_prob, ..
            } => {
                if self.companion.as_ref().map(|c| c.x.len()) != Some(d) {
                    self.companion = Some(self.spawn_companion(walker, log_target, rng)?);
                }
                if rng.random::<f64>() < random_walk_prob {
                    let acc = self.random_walk(walker, log_target, rng, false, adapt)?;
                    return Ok(("random_walk", acc));
                }
                let companion = self.companion.as_mut().expect("companion set above");
                let acc = if rng.random::<bool>() {
                    let anchor = companion.clone();
                    stretch(walker, &anchor, a, log_target, rng)?
                } else {
                    let anchor = walker.clone();
                    stretch(companion, &anchor, a, log_target, rng)?
                };
                Ok(("stretch", acc))
            }
        }
    }

    fn spawn_companion<R, F>(&self, walker: &Walker, log_target: &mut F, rng: &mut R) -> Result<Walker>
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> Result<f64>,
    {
        for _ in 0..1000 {
            let x: Vec<f64> = walker
                .x
                .iter()
                .enumerate()
                .map(|(i, v)| v + self.scale(i) * std_normal(rng))
                .collect();
            let lp = checked(log_target, &x)?;
            if lp.is_finite() {
                return Ok(Walker { x, log_post: lp });
            }
        }
        Ok(walker.clone())
    }

    fn random_walk<R, F>(
        &mut self,
        walker: &mut Walker,
        log_target: &mut F,
        rng: &mut R,
        single_site: bool,
        adapt: bool,
    ) -> Result<bool>
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let d = walker.x.len();
        let mut y = walker.x.clone();
        if single_site {
            let i = rng.random_range(0..d);
            y[i] += self.scale(i) * std_normal(rng);
            let acc = mh_step(walker, y, 0.0, log_target, rng)?;
            if adapt {
                let j = i.min(self.log_scales.len() - 1);
                self.site_visits[j] += 1;
                let gain = (1.0 / (self.site_visits[j] as f64).sqrt()).min(0.5);
                self.log_scales[j] += gain * (f64::from(acc as u8) - RW_TARGET_SITE);
            }
            Ok(acc)
        } else {
            for (i, v) in y.iter_mut().enumerate() {
                *v += self.scale(i) * std_normal(rng);
            }
            let acc = mh_step(walker, y, 0.0, log_target, rng)?;
            if adapt {
                self.site_visits[0] += 1;
                let gain = (1.0 / (self.site_visits[0] as f64).sqrt()).min(0.5);
                let delta = gain * (f64::from(acc as u8) - RW_TARGET_BLOCK);
                for s in self.log_scales.iter_mut() {
                    *s += delta;
                }
            }
            Ok(acc)
        }
    }
}

fn stretch<R, F>(mover: &mut Walker, anchor: &Walker, a: f64, log_target: &mut F, rng: &mut R) -> Result<bool>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let u: f64 = rng.random();
    let z = ((a - 1.0) * u + 1.0).powi(2) / a;
    let y: Vec<f64> = mover
        .x
        .iter()
        .zip(&anchor.x)
        .map(|(x, c)| c + z * (x - c))
        .collect();
    let d = mover.x.len() as f64;
    mh_step(mover, y, (d - 1.0) * z.ln(), log_target, rng)
}

/// Runs one chain. With `rj = Some(..)`, `log_target` must exclude the
/// dimension prior, which is added here; otherwise it is the full log
/// density.
pub fn run_chain<F>(
    init: Vec<f64>,
    mut log_target: F,
    kernel: Kernel,
    rj: Option<(&RjConfig, &DimPrior)>,
    settings: &RunSettings,
    seed: u64,
) -> Result<Chain>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_dim = rj.map(|(c, _)| c.k_max).unwrap_or(init.len());
    let mut within = Metropolis::new(kernel, max_dim)?;
    let dim_prior = rj.map(|(_, h)| h);
    let mut walker = Walker::new(init, &mut |x: &[f64]| with_dim_prior(&mut log_target, dim_prior, x))?;
    let mut chain = Chain::new(seed);
    for it in 0..settings.iterations {
        let adapt = settings.adapt && it < settings.burn_in;
        let jump = match rj {
            Some((cfg, _)) => rng.random::<f64>() < cfg.jump_prob,
            None => false,
        };
        if let (true, Some((cfg, h))) = (jump, rj) {
            let out = rj_step(&mut walker, cfg, h, &mut log_target, &mut rng)?;
            chain.record_move(out.kind(), out.accepted());
        } else {
            let mut full = |x: &[f64]| with_dim_prior(&mut log_target, dim_prior, x);
            let (name, acc) = within.step(&mut walker, &mut full, &mut rng, adapt)?;
            chain.record_move(name, acc);
        }
        if it >= settings.burn_in && (it - settings.burn_in) % settings.thin == 0 {
            chain.push(it, &walker.x, walker.log_post);
        }
    }
    chain.set_scales(within.scales());
    Ok(chain)
}

fn with_dim_prior<F>(log_target: &mut F, dim_prior: Option<&DimPrior>, x: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let base = log_target(x)?;
    Ok(match dim_prior {
        Some(h) => base + h.ln_pmf(x.len()),
        None => base,
    })
}
