//! Two-parameter 2D heat inversion: exact solution vs budgeted Crank–Nicolson.

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
    solve_to_budget, AdaptiveSolver, Discretization, ForwardMap, Heat2dForward, Heat2dParams, RefinementPolicy,
    RefinementRecord, RefinementRule,
};
use crate::obs::{DataSet, LocationScaleModel};
use crate::priors::CoeffPrior;
use crate::samplers::{hist_tv, run_chain, Chain, Kernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heat2dConfig {
    pub sigma: f64,
    /// True `(b, c)`.
    pub truth: [f64; 2],
    pub model: Heat2dParams,
    pub prior_b: CoeffPrior,
    pub prior_c: CoeffPrior,
    pub sampler: SamplerConfig,
    pub policy: RefinementPolicy,
    pub audit_stride: u64,
    pub hist_bins: usize,
    pub budget: BudgetConfig,
}

impl Default for Heat2dConfig {
    fn default() -> Self {
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        Self {
            sigma: 0.3,
            truth: [3.0, 5.0],
            model: Heat2dParams {
                alpha: 0.01,
                t1: 0.3,
                observations: grid.iter().flat_map(|&y| grid.iter().map(move |&x| (x, y))).collect(),
            },
            prior_b: CoeffPrior::TruncatedGamma {
                shape: 2.0,
                rate: 0.7,
                upper: 8.0,
            },
            prior_c: CoeffPrior::TruncatedGamma {
                shape: 2.0,
                rate: 0.4,
                upper: 8.0,
            },
            sampler: SamplerConfig {
                iterations: 400_000,
                burn_in: 20_000,
                thin: 5,
                adapt: true,
                kernel: Kernel::RandomWalk {
                    scale: 0.1,
                    single_site: false,
                },
            },
            policy: RefinementPolicy {
                rule: RefinementRule::HalveMesh {
                    dx: 0.1,
                    dy: 0.1,
                    dt: 0.268,
                },
                max_refinements: 4,
            },
            audit_stride: 1000,
            hist_bins: 50,
            budget: BudgetConfig::default(),
        }
    }
}

impl Heat2dConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        self.model.validate()?;
        if self.model.observations.is_empty() {
            return Err(Error::Config("heat2d needs at least one observation point".into()));
        }
        self.prior_b.validate()?;
        self.prior_c.validate()?;
        self.sampler.validate()?;
        self.policy.validate()?;
        if self.hist_bins == 0 {
            return Err(Error::Config("hist_bins must be positive".into()));
        }
        Ok(())
    }

    fn ln_prior(&self, x: &[f64]) -> f64 {
        self.prior_b.ln_pdf(x[0]) + self.prior_c.ln_pdf(x[1])
    }
}

/// One row of the posterior-mean comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmRow {
    pub param: String,
    pub truth: f64,
    pub exact: ParamSummary,
    pub numeric: ParamSummary,
    /// `|PM_exact − PM_numeric|` in units of the combined MC standard error.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heat2dSummary {
    pub experiment: String,
    pub seed: u64,
    pub posterior_means: Vec<PmRow>,
    pub hist_tv: BTreeMap<String, f64>,
    /// Mesh at which refinement first meets the tolerance at the true parameters.
    pub termination_at_truth: Discretization,
    pub final_discretization: Discretization,
    pub solver_calls: u64,
    pub worst_estimate: f64,
    pub fm_tolerance: f64,
    pub eabf_bound: f64,
    pub acceptance_exact: BTreeMap<String, f64>,
    pub acceptance_numeric: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct Heat2dReport {
    pub summary: Heat2dSummary,
    pub exact: Chain,
    pub numeric: Chain,
    pub audits: Vec<BudgetAudit>,
    pub refinement: Vec<RefinementRecord>,
    pub y: Vec<f64>,
    observations: Vec<(f64, f64)>,
}

const NAMES: [&str; 2] = ["b", "c"];

fn acceptance(chain: &Chain) -> BTreeMap<String, f64> {
    chain
        .moves()
        .keys()
        .filter_map(|k| chain.acceptance_rate(k).map(|r| (k.clone(), r)))
        .collect()
}

pub fn run_heat2d(cfg: &Heat2dConfig, seed: u64) -> Result<Heat2dReport> {
    cfg.validate()?;
    let fm = Heat2dForward::new(cfg.model.clone())?;
    let m = cfg.model.observations.len();
    let obs = LocationScaleModel::gaussian(cfg.sigma, m)?;
    let clean = cfg.model.exact(cfg.truth[0], cfg.truth[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, DATA_STREAM));
    let y = add_noise(&mut rng, &clean, cfg.sigma);
    let data = DataSet::new(y.clone(), cfg.model.observations.clone())?;

    let budget = cfg.budget.resolve(cfg.sigma, m, 0.0, obs.rho_at_zero())?;
    let at_truth = solve_to_budget(&fm, &cfg.truth, budget.tolerance(), &cfg.policy)?;
    let mut prior_rng = ChaCha8Rng::seed_from_u64(substream(seed, PRIOR_STREAM));
    let init = vec![cfg.prior_b.sample(&mut prior_rng), cfg.prior_c.sample(&mut prior_rng)];
    let chain_seed = substream(seed, CHAIN_STREAM);
    let settings = cfg.sampler.settings();
    let log_post = |eta: &[f64], ln_prior: f64| -> Result<f64> { Ok(ln_prior + obs.log_likelihood(&data, eta)?) };

    let (exact, numeric) = std::thread::scope(|s| {
        let exact = s.spawn(|| {
            run_chain(
                init.clone(),
                |x: &[f64]| {
                    let lp = cfg.ln_prior(x);
                    if lp == f64::NEG_INFINITY {
                        return Ok(lp);
                    }
                    log_post(&fm.solve(x, &Discretization::Exact)?.eta, lp)
                },
                cfg.sampler.kernel,
                None,
                &settings,
                chain_seed,
            )
        });
        let numeric = s.spawn(|| -> Result<_> {
            let mut solver =
                AdaptiveSolver::new(&fm, cfg.policy, budget.tolerance())?.with_audit_stride(cfg.audit_stride);
            let chain = run_chain(
                init.clone(),
                |x: &[f64]| {
                    let lp = cfg.ln_prior(x);
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
        (
            exact.join().expect("exact chain panicked"),
            numeric.join().expect("numeric chain panicked"),
        )
    });
    let exact = exact?;
    let (numeric, solver) = numeric?;

    let mut tv = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, name) in NAMES.iter().enumerate() {
        let (a, b) = (exact.coordinate(i), numeric.coordinate(i));
        tv.insert(name.to_string(), hist_tv(&a, &b, cfg.hist_bins)?);
        let (e, n) = (ParamSummary::from_series(*name, &a), ParamSummary::from_series(*name, &b));
        let z = match (e.mc_se, n.mc_se) {
            (Some(se), Some(sn)) => Some((e.mean - n.mean).abs() / se.hypot(sn)),
            _ => None,
        };
        rows.push(PmRow {
            param: name.to_string(),
            truth: cfg.truth[i],
            exact: e,
            numeric: n,
            z,
        });
    }
    let audits = vec![
        BudgetAudit::new("exact", &budget, 0, 0.0),
        BudgetAudit::new("numeric", &budget, solver.calls(), solver.worst_estimate()),
    ];
    let summary = Heat2dSummary {
        experiment: "heat2d".into(),
        seed,
        posterior_means: rows,
        hist_tv: tv,
        termination_at_truth: at_truth.solve.discretization,
        final_discretization: solver.discretization(),
        solver_calls: solver.calls(),
        worst_estimate: solver.worst_estimate(),
        fm_tolerance: budget.tolerance(),
        eabf_bound: budget.eabf_for(solver.worst_estimate()),
        acceptance_exact: acceptance(&exact),
        acceptance_numeric: acceptance(&numeric),
    };
    Ok(Heat2dReport {
        summary,
        refinement: solver.audit().to_vec(),
        exact,
        numeric,
        audits,
        y,
        observations: cfg.model.observations.clone(),
    })
}

impl Heat2dReport {
    pub fn artifacts(&self) -> Vec<Artifact> {
        let data: Vec<_> = self
            .observations
            .iter()
            .zip(&self.y)
            .map(|(&(x, y), v)| fmt_row(&[x, y, *v]))
            .collect();
        let pm: Vec<_> = self
            .summary
            .posterior_means
            .iter()
            .map(|r| {
                let mut row = vec![r.param.clone()];
                row.extend(fmt_row(&[
                    r.truth,
                    r.exact.mean,
                    r.exact.mc_se.unwrap_or(f64::NAN),
                    r.numeric.mean,
                    r.numeric.mc_se.unwrap_or(f64::NAN),
                ]));
                row
            })
            .collect();
        let mut out = vec![
            Artifact::table("data.tsv", &["x", "y", "u"], &data),
            Artifact::table(
                "posterior_means.tsv",
                &["param", "truth", "pm_exact", "mc_se_exact", "pm_numeric", "mc_se_numeric"],
                &pm,
            ),
            Artifact::new("chain_exact.tsv", self.exact.to_tsv(2)),
            Artifact::new("chain_numeric.tsv", self.numeric.to_tsv(2)),
        ];
        out.extend(audit_artifacts(&self.audits, &[("numeric", &self.refinement)]).expect("audit records serialize"));
        let names: Vec<String> = NAMES.iter().map(|s| s.to_string()).collect();
        out.extend(diagnostics_tables(
            &[("exact", &self.exact), ("numeric", &self.numeric)],
            &names,
        ));
        out
    }
}
