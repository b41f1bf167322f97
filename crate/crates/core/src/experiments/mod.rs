//! The worked examples and the rate harness as reproducible experiments.
//!
//! An experiment is described by a TOML file holding a mandatory `seed` and a
//! single table named after the experiment:
//!
//! ```toml
//! seed = 7
//!
//! [heat2d]
//! sigma = 0.3
//! truth = [3.0, 5.0]
//! ```
//!
//! Omitted fields take the documented defaults. Every run produces a report
//! directory with the config snapshot, chains, diagnostics, the budget audit
//! and a summary record. Output depends only on the config and seed.

mod common;
mod deconv;
mod heat1d;
mod heat2d;
mod rates;
mod wave;

pub use common::{Artifact, BudgetConfig, ParamSummary, SamplerConfig};
pub use deconv::{run_deconv, DeconvConfig, DeconvReport};
pub use heat1d::{run_heat1d, termination_study, Heat1dConfig, Heat1dReport, TerminationStudy, TrueConductivity};
pub use heat2d::{run_heat2d, Heat2dConfig, Heat2dReport};
pub use rates::{run_rates, RateKind, RatesConfig, RatesReport};
pub use wave::{run_wave, WaveConfig, WaveReport};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Wave,
    Deconv,
    Heat1d,
    Heat2d,
    Rates,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Wave,
        ExperimentId::Deconv,
        ExperimentId::Heat1d,
        ExperimentId::Heat2d,
        ExperimentId::Rates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Wave => "wave",
            ExperimentId::Deconv => "deconv",
            ExperimentId::Heat1d => "heat1d",
            ExperimentId::Heat2d => "heat2d",
            ExperimentId::Rates => "rates",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Wave(WaveConfig),
    Deconv(DeconvConfig),
    Heat1d(Heat1dConfig),
    Heat2d(Heat2dConfig),
    Rates(RatesConfig),
}

impl Experiment {
    pub fn id(&self) -> ExperimentId {
        match self {
            Experiment::Wave(_) => ExperimentId::Wave,
            Experiment::Deconv(_) => ExperimentId::Deconv,
            Experiment::Heat1d(_) => ExperimentId::Heat1d,
            Experiment::Heat2d(_) => ExperimentId::Heat2d,
            Experiment::Rates(_) => ExperimentId::Rates,
        }
    }

    pub fn default_for(id: ExperimentId) -> Self {
        match id {
            ExperimentId::Wave => Experiment::Wave(WaveConfig::default()),
            ExperimentId::Deconv => Experiment::Deconv(DeconvConfig::default()),
            ExperimentId::Heat1d => Experiment::Heat1d(Heat1dConfig::default()),
            ExperimentId::Heat2d => Experiment::Heat2d(Heat2dConfig::default()),
            ExperimentId::Rates => Experiment::Rates(RatesConfig::default()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Experiment::Wave(c) => c.validate(),
            Experiment::Deconv(c) => c.validate(),
            Experiment::Heat1d(c) => c.validate(),
            Experiment::Heat2d(c) => c.validate(),
            Experiment::Rates(c) => c.validate(),
        }
    }

    fn to_value(&self) -> Result<Value> {
        let v = match self {
            Experiment::Wave(c) => Value::try_from(c),
            Experiment::Deconv(c) => Value::try_from(c),
            Experiment::Heat1d(c) => Value::try_from(c),
            Experiment::Heat2d(c) => Value::try_from(c),
            Experiment::Rates(c) => Value::try_from(c),
        };
        v.map_err(|e| Error::Serialization(e.to_string()))
    }

    fn from_value(id: ExperimentId, v: Value) -> Result<Self> {
        let e = |err: toml::de::Error| Error::Config(format!("[{id}] {}", err.message()));
        Ok(match id {
            ExperimentId::Wave => Experiment::Wave(v.try_into().map_err(e)?),
            ExperimentId::Deconv => Experiment::Deconv(v.try_into().map_err(e)?),
            ExperimentId::Heat1d => Experiment::Heat1d(v.try_into().map_err(e)?),
            ExperimentId::Heat2d => Experiment::Heat2d(v.try_into().map_err(e)?),
            ExperimentId::Rates => Experiment::Rates(v.try_into().map_err(e)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn new(seed: u64, experiment: Experiment) -> Result<Self> {
        let cfg = Self { seed, experiment };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_for(id: ExperimentId, seed: u64) -> Self {
        Self {
            seed,
            experiment: Experiment::default_for(id),
        }
    }

    pub fn id(&self) -> ExperimentId {
        self.experiment.id()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        self.experiment.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(toml::from_str(text)?)
    }

    /// Parses `text` after applying `key.path=value` overrides. Values are
    /// read as TOML, falling back to a bare string.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: Table = toml::from_str(text)?;
        for (path, raw) in overrides {
            set_path(&mut table, path, parse_scalar(raw))?;
        }
        Self::from_table(table)
    }

    /// Like [`from_toml_with_overrides`](Self::from_toml_with_overrides) for a
    /// named experiment: a missing table means all defaults, and a table for a
    /// different experiment is an error.
    pub fn from_toml_for(id: ExperimentId, text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: Table = toml::from_str(text)?;
        if let Some(other) = table.keys().find(|k| *k != "seed" && k.as_str() != id.name()) {
            return Err(Error::Config(format!("config has table `{other}` but `{id}` was requested")));
        }
        table
            .entry(id.name())
            .or_insert_with(|| Value::Table(Table::new()));
        for (path, raw) in overrides {
            set_path(&mut table, path, parse_scalar(raw))?;
        }
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn from_table(mut table: Table) -> Result<Self> {
        let seed = match table.remove("seed") {
            Some(Value::Integer(s)) if s >= 0 => s as u64,
            Some(other) => {
                return Err(Error::Config(format!("seed must be a non-negative integer, got {other}")))
            }
            None => return Err(Error::Config("missing mandatory `seed`".into())),
        };
        let mut found = None;
        for (key, value) in table {
            let id: ExperimentId = key
                .parse()
                .map_err(|_| Error::Config(format!("unknown top-level key `{key}`")))?;
            if found.is_some() {
                return Err(Error::Config("config must contain exactly one experiment table".into()));
            }
            let Value::Table(given) = value else {
                return Err(Error::Config(format!("`{key}` must be a table")));
            };
            let Value::Table(mut merged) = Experiment::default_for(id).to_value()? else {
                unreachable!("experiment configs serialize to tables");
            };
            merge(&mut merged, given);
            found = Some(Experiment::from_value(id, Value::Table(merged))?);
        }
        let experiment =
            found.ok_or_else(|| Error::Config("config has no experiment table".into()))?;
        Self::new(seed, experiment)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let mut table = Table::new();
        let seed = i64::try_from(self.seed)
            .map_err(|_| Error::Config("seed must fit in a signed 64-bit integer".into()))?;
        table.insert("seed".into(), Value::Integer(seed));
        table.insert(self.id().name().into(), self.experiment.to_value()?);
        Ok(toml::to_string(&table)?)
    }
}

/// Overlays `over` onto `base`. Tagged tables whose `kind` changes are
/// replaced wholesale.
fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) if b.get("kind") == o.get("kind") || o.get("kind").is_none() => {
                merge(b, o)
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn parse_scalar(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(table: &mut Table, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("invalid override key `{path}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{path}`: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Summary record plus the files of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.seed;
    let (summary, artifacts) = match &cfg.experiment {
        Experiment::Wave(c) => {
            let r = run_wave(c, seed)?;
            (serde_json::to_value(&r.summary)?, r.artifacts())
        }
        Experiment::Deconv(c) => {
            let r = run_deconv(c, seed)?;
            (serde_json::to_value(&r.summary)?, r.artifacts())
        }
        Experiment::Heat1d(c) => {
            let r = run_heat1d(c, seed)?;
            (serde_json::to_value(&r.summary)?, r.artifacts())
        }
        Experiment::Heat2d(c) => {
            let r = run_heat2d(c, seed)?;
            (serde_json::to_value(&r.summary)?, r.artifacts())
        }
        Experiment::Rates(c) => {
            let r = run_rates(c)?;
            (serde_json::to_value(&r)?, r.artifacts())
        }
    };
    let mut files = vec![Artifact::new("config.toml", cfg.to_toml_string()?)];
    files.extend(artifacts);
    files.push(Artifact::new(
        "summary.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    ));
    Ok(RunOutput {
        summary,
        artifacts: files,
    })
}

/// Runs the experiment and writes its report files into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    let out = run(cfg)?;
    std::fs::create_dir_all(dir)?;
    for a in &out.artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(out)
}
