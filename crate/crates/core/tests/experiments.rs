use std::collections::BTreeSet;

use eabf::budget::BudgetAudit;
use eabf::experiments::{
    run, run_deconv, run_heat1d, run_heat2d, run_to_dir, run_wave, termination_study, DeconvConfig, Experiment,
    ExperimentConfig, ExperimentId, Heat1dConfig, Heat2dConfig, RateKind, RatesConfig, SamplerConfig, WaveConfig,
};
use eabf::samplers::Kernel;
use eabf::Error;

fn short(sampler: SamplerConfig, iterations: u64) -> SamplerConfig {
    SamplerConfig { iterations, burn_in: iterations / 10, thin: 1, ..sampler }
}

fn audits(text: &str) -> Vec<BudgetAudit> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn wave_report_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default_for(ExperimentId::Wave, 4);
    let out = run_to_dir(&cfg, dir.path()).unwrap();
    let names: BTreeSet<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    for f in ["config.toml", "summary.json", "data.tsv", "kappa_pmf.tsv", "budget_audit.jsonl"] {
        assert!(names.contains(f), "missing {f}: {names:?}");
    }
    let snapshot = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&snapshot).unwrap(), cfg);
    assert_eq!(out.summary["seed"], 4);
    assert_eq!(out.summary["mode_small"], 4);
}

#[test]
fn wave_noiseless_abf_is_negligible() {
    let cfg = WaveConfig { noiseless: true, ..WaveConfig::default() };
    let r = run_wave(&cfg, 1).unwrap();
    assert_eq!(r.summary.mode_small, 4);
    assert!(r.summary.abf < 1e-4);
    assert!(r.summary.abf <= r.summary.tail_mass);
}

#[test]
fn short_deconv_run_respects_the_dimension_cap_and_budget() {
    let base = DeconvConfig::default();
    let tight = DeconvConfig { sampler: short(base.sampler, 20_000), k_max: 9, ..base.clone() };
    assert!(matches!(run_deconv(&tight, 5), Err(Error::InfeasibleBudget { .. })));
    let cfg = DeconvConfig { sampler: short(base.sampler, 20_000), ..base };
    let r = run_deconv(&cfg, 5).unwrap();
    assert!(r.summary.max_sampled_dimension <= cfg.k_max);
    assert!(r.exact.dims().iter().all(|d| d % 2 == 1));
    assert!(r.summary.worst_estimate <= r.summary.fm_tolerance);
    assert!(!r.audits.is_empty());
    assert!(r.audits.iter().all(|a| a.worst_estimate <= a.tolerance));
    let levels: Vec<usize> = r.refinement.iter().map(|x| x.level).collect();
    assert!(levels.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn short_heat2d_run_meets_its_budget() {
    let base = Heat2dConfig::default();
    let cfg = Heat2dConfig { sampler: short(base.sampler, 10_000), ..base };
    let r = run_heat2d(&cfg, 2).unwrap();
    assert!(r.summary.worst_estimate <= r.summary.fm_tolerance);
    assert_eq!(r.summary.posterior_means.len(), 2);
    assert!(r.exact.samples().iter().all(|s| s.iter().all(|v| (0.0..=8.0).contains(v))));
}

#[test]
fn short_heat1d_run_and_termination_study() {
    let base = Heat1dConfig::default();
    let cfg = Heat1dConfig {
        sampler: short(base.sampler, 4_000),
        prior_draws: 10,
        gibbs_sweeps: 50,
        ..base
    };
    let study = termination_study(&cfg, 3).unwrap();
    assert_eq!(study.counts.values().sum::<usize>(), 10);
    assert!(study.counts.keys().all(|n| (n - 50) % 50 == 0));
    let r = run_heat1d(&cfg, 3).unwrap();
    assert!(r.summary.worst_estimate <= r.summary.fm_tolerance);
    assert_eq!(r.summary.control_elements, 500);
}

#[test]
fn rates_only_runs_the_requested_part() {
    let out = run(&ExperimentConfig {
        seed: 1,
        experiment: Experiment::Rates(RatesConfig::only(RateKind::Lemma)),
    })
    .unwrap();
    assert!(out.summary["k"].is_null());
    assert!(out.artifacts.iter().any(|a| a.name == "lemma.tsv"));
}

#[test]
fn budget_audit_records_parse() {
    let cfg = ExperimentConfig::from_toml_for(
        ExperimentId::Heat2d,
        "seed = 9\n",
        &[
            ("heat2d.sampler.iterations".into(), "3000".into()),
            ("heat2d.sampler.burn_in".into(), "300".into()),
        ],
    )
    .unwrap();
    let out = run(&cfg).unwrap();
    let text = &out.artifacts.iter().find(|a| a.name == "budget_audit.jsonl").unwrap().contents;
    let records = audits(text);
    assert!(!records.is_empty());
    for a in records {
        assert!((a.k * a.m as f64 / a.sigma * a.rho0 + a.tail - a.b).abs() < 1e-12);
        assert!(a.eabf_bound <= a.b);
    }
}

#[test]
fn kernel_swap_through_config_replaces_the_table() {
    let cfg = ExperimentConfig::from_toml_str(
        "seed = 1\n[heat2d.sampler.kernel]\nkind = \"pair_stretch\"\na = 2.0\nrandom_walk_prob = 0.1\nscale = 0.2\n",
    )
    .unwrap();
    match cfg.experiment {
        Experiment::Heat2d(c) => {
            assert!(matches!(c.sampler.kernel, Kernel::PairStretch { .. }));
            assert_eq!(c.sampler.iterations, Heat2dConfig::default().sampler.iterations);
        }
        _ => panic!("wrong experiment"),
    }
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let bad = [
        "seed = 1\n[wave]\nk_small = 30\n",
        "seed = 1\n[deconv]\nsigma = -1.0\n",
        "seed = 1\n[heat2d.sampler]\nburn_in = 10000000\n",
        "seed = 1\n[wave.budget]\nb = 0.0\n",
    ];
    for text in bad {
        let parsed = ExperimentConfig::from_toml_str(text);
        assert!(parsed.is_err() || run(&parsed.unwrap()).is_err(), "{text}");
    }
}
