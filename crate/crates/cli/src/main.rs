use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use eabf::budget::{fm_tolerance, DEFAULT_B};
use eabf::experiments::{run_rates, run_to_dir, Artifact, ExperimentConfig, ExperimentId, RateKind, RatesConfig};
use eabf::obs::density_by_name;
use eabf::Error;

/// Bayesian inverse-problem experiments with a forward-map error budget.
#[derive(Debug, Parser)]
#[command(name = "eabf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its report directory.
    Run {
        /// wave, deconv, heat1d, heat2d or rates.
        experiment: ExperimentId,
        /// TOML config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory (default `runs/<experiment>-<seed>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Field override relative to the experiment table, e.g. `sampler.iterations=5000`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the forward-map tolerance K = (σ/m)(b − tail)/ρ(0).
    Budget {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        /// Prior truncation tail mass P(κ > k).
        #[arg(long, default_value_t = 0.0)]
        tail: f64,
        /// Standardized error density.
        #[arg(long, default_value = "gaussian")]
        density: String,
    },
    /// Run one family of rate checks and print the report as JSON.
    Rates {
        #[arg(long, value_parser = parse_rate_kind)]
        which: RateKind,
        /// Also write the rate tables here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_rate_kind(s: &str) -> Result<RateKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), Error> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
            set,
        } => {
            let text = match &config {
                Some(path) => std::fs::read_to_string(path)?,
                None => String::new(),
            };
            let mut overrides = Vec::new();
            if let Some(s) = seed {
                overrides.push(("seed".to_string(), s.to_string()));
            }
            for kv in &set {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("override `{kv}` is not KEY=VALUE")))?;
                overrides.push((format!("{experiment}.{}", k.trim()), v.trim().to_string()));
            }
            let cfg = ExperimentConfig::from_toml_for(experiment, &text, &overrides)?;
            let dir = out.unwrap_or_else(|| PathBuf::from(format!("runs/{experiment}-{}", cfg.seed)));
            let output = run_to_dir(&cfg, &dir)?;
            emit(&serde_json::to_string_pretty(&output.summary)?)?;
        }
        Command::Budget {
            sigma,
            m,
            b,
            tail,
            density,
        } => {
            let rho0 = density_by_name(&density)?.pdf(0.0);
            emit(&fm_tolerance(sigma, m, b, tail, rho0)?.to_string())?;
        }
        Command::Rates { which, out } => {
            let report = run_rates(&RatesConfig::only(which))?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut files = report.artifacts();
                files.push(Artifact::new("summary.json", serde_json::to_string_pretty(&report)? + "\n"));
                for a in files {
                    std::fs::write(dir.join(&a.name), &a.contents)?;
                }
            }
            emit(&serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.render().to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
