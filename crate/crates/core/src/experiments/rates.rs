//! Convergence-rate checks on toy problems with exact posteriors on a grid.

use serde::{Deserialize, Serialize};

use super::common::{fmt_row, Artifact};
use crate::error::{Error, Result};
use crate::verify::{
    lemma_a2_check, rate_experiment_k, rate_experiment_n, two_atom_check, LemmaConfig, LemmaConstruction,
    LemmaReport, RateKConfig, RateKReport, RateNConfig, RateNReport, TwoAtomReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// TV against the discretization level n.
    N,
    /// TV against the prior truncation k.
    K,
    Lemma,
}

impl std::str::FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(RateKind::N),
            "k" => Ok(RateKind::K),
            "lemma" => Ok(RateKind::Lemma),
            _ => Err(Error::Config(format!("unknown rate check `{s}` (expected n, k or lemma)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoAtomConfig {
    pub w: f64,
    pub eps: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub which: Vec<RateKind>,
    /// One rate table per injected order.
    pub n: Vec<RateNConfig>,
    pub k: RateKConfig,
    pub lemma: LemmaConfig,
    pub two_atom: TwoAtomConfig,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            which: vec![RateKind::N, RateKind::K, RateKind::Lemma],
            n: vec![RateNConfig::with_order(2.0), RateNConfig::with_order(4.0)],
            k: RateKConfig::default(),
            lemma: LemmaConfig::default(),
            two_atom: TwoAtomConfig {
                w: 0.3,
                eps: 0.05,
                f1: 0.5,
                f2: 2.0,
            },
        }
    }
}

impl RatesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.which.is_empty() {
            return Err(Error::Config("rates: `which` selects nothing".into()));
        }
        for n in &self.n {
            n.validate()?;
        }
        self.k.validate()
    }

    /// Defaults restricted to one kind of check.
    pub fn only(kind: RateKind) -> Self {
        Self {
            which: vec![kind],
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    pub experiment: String,
    pub n: Vec<RateNReport>,
    pub k: Option<RateKReport>,
    pub two_atom: Option<TwoAtomReport>,
    pub lemma: Vec<LemmaReport>,
}

pub fn run_rates(cfg: &RatesConfig) -> Result<RatesReport> {
    cfg.validate()?;
    let mut report = RatesReport {
        experiment: "rates".into(),
        n: Vec::new(),
        k: None,
        two_atom: None,
        lemma: Vec::new(),
    };
    if cfg.which.contains(&RateKind::N) {
        report.n = cfg.n.iter().map(rate_experiment_n).collect::<Result<_>>()?;
    }
    if cfg.which.contains(&RateKind::K) {
        report.k = Some(rate_experiment_k(&cfg.k)?);
        let t = cfg.two_atom;
        report.two_atom = Some(two_atom_check(t.w, t.eps, t.f1, t.f2)?);
    }
    if cfg.which.contains(&RateKind::Lemma) {
        report.lemma = LemmaConstruction::ALL
            .iter()
            .map(|&c| lemma_a2_check(c, &cfg.lemma))
            .collect::<Result<_>>()?;
    }
    Ok(report)
}

impl RatesReport {
    pub fn artifacts(&self) -> Vec<Artifact> {
        let mut out = Vec::new();
        if !self.n.is_empty() {
            let rows: Vec<_> = self
                .n
                .iter()
                .flat_map(|r| {
                    r.rows.iter().map(move |row| {
                        let mut v = fmt_row(&[r.p]);
                        v.push(row.n.to_string());
                        v.extend(fmt_row(&[row.tv, row.bound, row.ratio]));
                        v
                    })
                })
                .collect();
            out.push(Artifact::table("rate_n.tsv", &["p", "n", "tv", "bound", "ratio"], &rows));
        }
        if let Some(k) = &self.k {
            let rows: Vec<_> = k
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.k.to_string()];
                    v.extend(fmt_row(&[r.tv_posterior, r.tv_prior, r.tail_mass, r.bound]));
                    v.push(r.holds.to_string());
                    v
                })
                .collect();
            out.push(Artifact::table(
                "rate_k.tsv",
                &["k", "tv_posterior", "tv_prior", "tail_mass", "bound", "holds"],
                &rows,
            ));
            let rows: Vec<_> = k
                .combined
                .iter()
                .map(|r| {
                    let mut v = vec![r.n.to_string(), r.k.to_string()];
                    v.extend(fmt_row(&[r.tv, r.bound]));
                    v.push(r.holds.to_string());
                    v
                })
                .collect();
            out.push(Artifact::table("rate_nk.tsv", &["n", "k", "tv", "bound", "holds"], &rows));
        }
        if !self.lemma.is_empty() {
            let rows: Vec<_> = self
                .lemma
                .iter()
                .flat_map(|r| {
                    let name = serde_json::to_value(r.construction)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default();
                    r.rows.iter().map(move |row| {
                        let mut v = vec![name.clone(), row.n.to_string()];
                        v.extend(fmt_row(&[row.z_gap, row.z_bound, row.tv, row.tv_bound]));
                        v.push(row.holds.to_string());
                        v
                    })
                })
                .collect();
            out.push(Artifact::table(
                "lemma.tsv",
                &["construction", "n", "z_gap", "z_bound", "tv", "tv_bound", "holds"],
                &rows,
            ));
        }
        out
    }
}
