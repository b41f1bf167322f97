use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{BudgetAudit, ErrorBudget, DEFAULT_B};
use crate::error::{Error, Result};
use crate::forward::RefinementRecord;
use crate::samplers::{iat, Chain, Kernel, RunSettings};
use crate::special::std_normal;

/// A report file: name relative to the report directory and its contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }

    pub fn jsonl<T: Serialize>(name: impl Into<String>, records: &[T]) -> Result<Self> {
        let mut s = String::new();
        for r in records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(Self::new(name, s))
    }

    /// Tab-separated table with a header row.
    pub fn table(name: impl Into<String>, header: &[&str], rows: &[Vec<String>]) -> Self {
        let mut s = header.join("\t");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        Self::new(name, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// EABF threshold.
    pub b: f64,
    pub safety: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            b: DEFAULT_B,
            safety: 1.0,
        }
    }
}

impl BudgetConfig {
    pub fn resolve(&self, sigma: f64, m: usize, tail: f64, rho0: f64) -> Result<ErrorBudget> {
        ErrorBudget::new(sigma, m, self.b, tail, rho0)?.with_safety(self.safety)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub adapt: bool,
    pub kernel: Kernel,
}

impl SamplerConfig {
    pub fn settings(&self) -> RunSettings {
        RunSettings {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            adapt: self.adapt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()?;
        self.kernel.validate()
    }
}

/// Marginal posterior summary of one scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// `None` when the series is constant or too short.
    pub iat: Option<f64>,
    /// Monte Carlo standard error of the mean, `sd·√(IAT/n)`.
    pub mc_se: Option<f64>,
}

impl ParamSummary {
    pub fn from_series(name: impl Into<String>, xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let tau = iat(xs).ok();
        Self {
            name: name.into(),
            mean,
            sd: var.sqrt(),
            iat: tau,
            mc_se: tau.map(|t| (var * t / n).sqrt()),
        }
    }
}

/// Independent seed for a named sub-stream (SplitMix64 of the pair).
pub(crate) fn substream(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const DATA_STREAM: u64 = 1;
pub(crate) const CHAIN_STREAM: u64 = 2;
pub(crate) const PRIOR_STREAM: u64 = 3;

pub(crate) fn add_noise<R: Rng + ?Sized>(rng: &mut R, eta: &[f64], sigma: f64) -> Vec<f64> {
    eta.iter().map(|e| e + sigma * std_normal(rng)).collect()
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive, got {v}")))
    }
}

pub(crate) fn fmt_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{v}")).collect()
}

pub(crate) fn audit_artifacts(
    audits: &[BudgetAudit],
    refinement: &[(&str, &[RefinementRecord])],
) -> Result<Vec<Artifact>> {
    let mut out = vec![Artifact::jsonl("budget_audit.jsonl", audits)?];
    let mut s = String::new();
    for (run, records) in refinement {
        for r in records.iter() {
            let mut v = serde_json::to_value(r)?;
            v["run"] = serde_json::Value::String(run.to_string());
            let _ = writeln!(s, "{}", serde_json::to_string(&v)?);
        }
    }
    out.push(Artifact::new("refinement_audit.jsonl", s));
    Ok(out)
}

/// Per-coordinate chain diagnostics and move acceptance rates.
pub(crate) fn diagnostics_tables(chains: &[(&str, &Chain)], names: &[String]) -> Vec<Artifact> {
    let mut rows = Vec::new();
    let mut moves = Vec::new();
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v}"));
    for (run, chain) in chains {
        for (i, name) in names.iter().enumerate() {
            let s = ParamSummary::from_series(name.clone(), &chain.coordinate_or_zero(i));
            rows.push(vec![
                run.to_string(),
                name.clone(),
                format!("{}", s.mean),
                format!("{}", s.sd),
                opt(s.iat),
                opt(s.mc_se),
            ]);
        }
        for (kind, st) in chain.moves() {
            moves.push(vec![
                run.to_string(),
                kind.clone(),
                format!("{}", st.proposed),
                format!("{}", st.accepted),
            ]);
        }
    }
    vec![
        Artifact::table("diagnostics.tsv", &["run", "param", "mean", "sd", "iat", "mc_se"], &rows),
        Artifact::table("acceptance.tsv", &["run", "move", "proposed", "accepted"], &moves),
    ]
}
