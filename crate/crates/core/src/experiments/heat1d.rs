//! Stationary 1D heat equation: log-conductivity on spline knots, FEM forward
//! map refined by elements until the residual estimate meets the budget.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::common::{
    add_noise, audit_artifacts, check_positive, diagnostics_tables, fmt_row, substream, Artifact, BudgetConfig,
    ParamSummary, SamplerConfig, CHAIN_STREAM, DATA_STREAM, PRIOR_STREAM,
};
use crate::budget::BudgetAudit;
use crate::error::{Error, Result};
use crate::forward::{
    fem1d_heat_solve, heat_forcing, solve_to_budget, AdaptiveSolver, Discretization, ForwardMap, Heat1dForward, RefinementPolicy,
    RefinementRecord, RefinementRule,
};
use crate::obs::{DataSet, LocationScaleModel};
use crate::priors::GmrfPrior;
use crate::samplers::{hist_tv, run_chain, Chain, Kernel};

/// Independent stream for the initial state, so it does not share draws with
/// the termination study.
const INIT_STREAM: u64 = 4;

/// `a(x) = k₀ − r k₀ / (1 + exp(−a x + a/s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueConductivity {
    pub k0: f64,
    pub r: f64,
    pub a: f64,
    pub s: f64,
}

impl Default for TrueConductivity {
    fn default() -> Self {
        Self {
            k0: 5.0,
            r: 0.9,
            a: 20.0,
            s: 2.0,
        }
    }
}

impl TrueConductivity {
    /// `(a(x), a′(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let e = (-self.a * x + self.a / self.s).exp();
        let g = 1.0 / (1.0 + e);
        let v = self.k0 - self.r * self.k0 * g;
        let d = -self.r * self.k0 * self.a * e * g * g;
        (v, d)
    }

    fn validate(&self) -> Result<()> {
        // a(x) stays positive on [0, 1] iff k₀(1 − r) > 0 and k₀ > 0
        if !(self.k0 > 0.0 && self.r < 1.0 && self.s != 0.0) {
            return Err(Error::Config("true conductivity must stay positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heat1dConfig {
    pub sigma: f64,
    pub m: usize,
    pub truth: TrueConductivity,
    /// Elements used to synthesize the data.
    pub data_elements: usize,
    pub prior: GmrfPrior,
    pub policy: RefinementPolicy,
    /// Element count of the fixed-resolution control run.
    pub control_elements: usize,
    pub prior_draws: usize,
    pub gibbs_sweeps: usize,
    pub sampler: SamplerConfig,
    pub audit_stride: u64,
    pub hist_bins: usize,
    pub budget: BudgetConfig,
}

impl Default for Heat1dConfig {
    fn default() -> Self {
        Self {
            sigma: 0.0005,
            m: 30,
            truth: TrueConductivity::default(),
            data_elements: 4000,
            prior: GmrfPrior {
                size: 21,
                precision: 50.0,
                upper: std::f64::consts::LN_10,
            },
            policy: RefinementPolicy {
                rule: RefinementRule::AddElements { initial: 50, step: 50 },
                max_refinements: 19,
            },
            control_elements: 500,
            prior_draws: 100,
            gibbs_sweeps: 200,
            sampler: SamplerConfig {
                iterations: 100_000,
                burn_in: 20_000,
                thin: 10,
                adapt: true,
                kernel: Kernel::RandomWalk {
                    scale: 0.01,
                    single_site: true,
                },
            },
            audit_stride: 1000,
            hist_bins: 50,
            budget: BudgetConfig::default(),
        }
    }
}

impl Heat1dConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        self.truth.validate()?;
        self.prior.validate()?;
        self.policy.validate()?;
        self.sampler.validate()?;
        if self.m == 0 || self.data_elements < 2 || self.control_elements < 2 || self.hist_bins == 0 {
            return Err(Error::Config(
                "heat1d needs m >= 1, at least 2 elements per solve and hist_bins >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `x_j = j/(m+1)`.
    pub fn design(&self) -> Vec<f64> {
        (1..=self.m).map(|j| j as f64 / (self.m + 1) as f64).collect()
    }

    fn forward(&self) -> Result<Heat1dForward> {
        Heat1dForward::new(self.prior.size, self.design())
    }

    fn tolerance(&self) -> Result<f64> {
        let obs = LocationScaleModel::gaussian(self.sigma, self.m)?;
        Ok(self.budget.resolve(self.sigma, self.m, 0.0, obs.rho_at_zero())?.tolerance())
    }
}

/// Refinement level reached by the budgeted solver over prior draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationStudy {
    pub draws: usize,
    pub tolerance: f64,
    /// Element count at termination → number of draws.
    pub counts: BTreeMap<usize, usize>,
    pub max_elements: usize,
    /// Element count needed by the true conductivity, for reference.
    pub truth_elements: usize,
}

fn elements(d: &Discretization) -> usize {
    match *d {
        Discretization::Elements { n } => n,
        _ => 0,
    }
}

pub fn termination_study(cfg: &Heat1dConfig, seed: u64) -> Result<TerminationStudy> {
    cfg.validate()?;
    let fm = cfg.forward()?;
    let tol = cfg.tolerance()?;
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, PRIOR_STREAM));
    let mut counts = BTreeMap::new();
    for _ in 0..cfg.prior_draws {
        let theta = cfg.prior.sample(&mut rng, cfg.gibbs_sweeps);
        let out = solve_to_budget(&fm, &theta, tol, &cfg.policy)?;
        *counts.entry(elements(&out.solve.discretization)).or_insert(0) += 1;
    }
    let mut truth_elements = 0;
    for level in 0..=cfg.policy.max_refinements {
        let n = elements(&cfg.policy.rule.at(level));
        if fem1d_heat_solve(|x| cfg.truth.eval(x), heat_forcing, n)?.estimate <= tol {
            truth_elements = n;
            break;
        }
    }
    Ok(TerminationStudy {
        draws: cfg.prior_draws,
        tolerance: tol,
        max_elements: counts.keys().copied().max().unwrap_or(0),
        counts,
        truth_elements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heat1dSummary {
    pub experiment: String,
    pub seed: u64,
    pub termination: TerminationStudy,
    pub adaptive_elements: usize,
    pub control_elements: usize,
    pub solver_calls: u64,
    pub worst_estimate: f64,
    pub fm_tolerance: f64,
    pub eabf_bound: f64,
    /// Largest per-knot hist_tv between the adaptive and control runs.
    pub max_hist_tv: f64,
    pub params_adaptive: Vec<ParamSummary>,
    pub params_control: Vec<ParamSummary>,
}

#[derive(Debug, Clone)]
pub struct Heat1dReport {
    pub summary: Heat1dSummary,
    pub adaptive: Chain,
    pub control: Chain,
    pub audits: Vec<BudgetAudit>,
    pub refinement: Vec<RefinementRecord>,
    pub y: Vec<f64>,
    design: Vec<f64>,
    /// `(x, true a, PM a adaptive, PM a control)`.
    conductivity: Vec<[f64; 4]>,
}

fn knot_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("b{i}")).collect()
}

fn mean_conductivity(fm: &Heat1dForward, chain: &Chain, xs: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; xs.len()];
    for s in chain.samples() {
        let spline = fm.log_conductivity(s)?;
        for (a, &x) in acc.iter_mut().zip(xs) {
            *a += spline.value(x).exp();
        }
    }
    let n = chain.len().max(1) as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

pub fn run_heat1d(cfg: &Heat1dConfig, seed: u64) -> Result<Heat1dReport> {
    cfg.validate()?;
    let termination = termination_study(cfg, seed)?;
    let fm = cfg.forward()?;
    let design = cfg.design();
    let obs = LocationScaleModel::gaussian(cfg.sigma, cfg.m)?;
    let fine = fem1d_heat_solve(|x| cfg.truth.eval(x), heat_forcing, cfg.data_elements)?;
    let clean: Vec<f64> = design.iter().map(|&x| fine.eval(x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, DATA_STREAM));
    let y = add_noise(&mut rng, &clean, cfg.sigma);
    let data = DataSet::new(y.clone(), design.clone())?;

    let budget = cfg.budget.resolve(cfg.sigma, cfg.m, 0.0, obs.rho_at_zero())?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(substream(seed, INIT_STREAM));
    let init = cfg.prior.sample(&mut init_rng, cfg.gibbs_sweeps);
    let chain_seed = substream(seed, CHAIN_STREAM);
    let settings = cfg.sampler.settings();
    let control_disc = Discretization::Elements {
        n: cfg.control_elements,
    };
    let log_post = |eta: &[f64], ln_prior: f64| -> Result<f64> { Ok(ln_prior + obs.log_likelihood(&data, eta)?) };

    let (adaptive, control) = std::thread::scope(|s| {
        let adaptive = s.spawn(|| -> Result<_> {
            let mut solver =
                AdaptiveSolver::new(&fm, cfg.policy, budget.tolerance())?.with_audit_stride(cfg.audit_stride);
            let chain = run_chain(
                init.clone(),
                |x: &[f64]| {
                    let lp = cfg.prior.ln_density(x);
                    if lp == f64::NEG_INFINITY {
                        return Ok(lp);
                    }
                    log_post(&solver.solve(x)?.eta, lp)
                },
                cfg.sampler.kernel,
                None,
                &settings,
                chain_seed,
            )?;
            Ok((chain, solver))
        });
        let control = s.spawn(|| {
            run_chain(
                init.clone(),
                |x: &[f64]| {
                    let lp = cfg.prior.ln_density(x);
                    if lp == f64::NEG_INFINITY {
                        return Ok(lp);
                    }
                    log_post(&fm.solve(x, &control_disc)?.eta, lp)
                },
                cfg.sampler.kernel,
                None,
                &settings,
                chain_seed,
            )
        });
        (
            adaptive.join().expect("adaptive chain panicked"),
            control.join().expect("control chain panicked"),
        )
    });
    let (adaptive, solver) = adaptive?;
    let control = control?;

    let names = knot_names(cfg.prior.size);
    let mut max_tv = 0.0f64;
    let mut params_adaptive = Vec::new();
    let mut params_control = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let (a, c) = (adaptive.coordinate(i), control.coordinate(i));
        max_tv = max_tv.max(hist_tv(&a, &c, cfg.hist_bins)?);
        params_adaptive.push(ParamSummary::from_series(name.clone(), &a));
        params_control.push(ParamSummary::from_series(name.clone(), &c));
    }
    let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let pm_a = mean_conductivity(&fm, &adaptive, &xs)?;
    let pm_c = mean_conductivity(&fm, &control, &xs)?;
    let conductivity = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| [x, cfg.truth.eval(x).0, pm_a[i], pm_c[i]])
        .collect();
    let audits = vec![BudgetAudit::new("adaptive", &budget, solver.calls(), solver.worst_estimate())];
    let summary = Heat1dSummary {
        experiment: "heat1d".into(),
        seed,
        termination,
        adaptive_elements: elements(&solver.discretization()),
        control_elements: cfg.control_elements,
        solver_calls: solver.calls(),
        worst_estimate: solver.worst_estimate(),
        fm_tolerance: budget.tolerance(),
        eabf_bound: budget.eabf_for(solver.worst_estimate()),
        max_hist_tv: max_tv,
        params_adaptive,
        params_control,
    };
    Ok(Heat1dReport {
        summary,
        refinement: solver.audit().to_vec(),
        adaptive,
        control,
        audits,
        y,
        design,
        conductivity,
    })
}

impl Heat1dReport {
    pub fn artifacts(&self) -> Vec<Artifact> {
        let width = self.summary.params_adaptive.len();
        let data: Vec<_> = self.design.iter().zip(&self.y).map(|(x, y)| fmt_row(&[*x, *y])).collect();
        let cond: Vec<_> = self.conductivity.iter().map(|r| fmt_row(r)).collect();
        let counts: Vec<_> = self
            .summary
            .termination
            .counts
            .iter()
            .map(|(n, c)| vec![n.to_string(), c.to_string()])
            .collect();
        let mut out = vec![
            Artifact::table("data.tsv", &["x", "y"], &data),
            Artifact::table("conductivity.tsv", &["x", "truth", "pm_adaptive", "pm_control"], &cond),
            Artifact::table("termination.tsv", &["elements", "draws"], &counts),
            Artifact::new("chain_adaptive.tsv", self.adaptive.to_tsv(width)),
            Artifact::new("chain_control.tsv", self.control.to_tsv(width)),
        ];
        out.extend(audit_artifacts(&self.audits, &[("adaptive", &self.refinement)]).expect("audit records serialize"));
        out.extend(diagnostics_tables(
            &[("adaptive", &self.adaptive), ("control", &self.control)],
            &knot_names(width),
        ));
        out
    }
}
