//! Experiment configuration files.
//!
//! A config is a TOML document with four top-level keys and one `[params]`
//! table whose schema depends on the experiment:
//!
//! ```toml
//! experiment = "fd-stationary"   # one of EXPERIMENT_IDS
//! seed = 7                       # mandatory master seed
//! realizations = 1               # ensemble size (defaults to 1)
//! output = "fd-stationary.csv"   # file name, resolved against --out
//!
//! [params]
//! dx = 0.005
//! ```
//!
//! Unknown keys are rejected everywhere so that typos surface as errors.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const EXPERIMENT_IDS: [&str; 11] = [
    "ahmad-trace",
    "ahmad-moments",
    "ahmad-gcc",
    "b2u-trace",
    "b2u-gcc-sweep",
    "b2u-components",
    "walk-trace",
    "walk-stationary",
    "fd-evolve",
    "fd-stationary",
    "sir-compare",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: u64,
    #[serde(default = "one")]
    realizations: usize,
    output: Option<String>,
    #[serde(default)]
    params: toml::Table,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: &'static str,
    pub seed: u64,
    pub realizations: usize,
    /// Output file name; defaults to `<experiment>.csv`.
    pub output: String,
    pub params: Params,
    /// SHA-256 of the config file bytes.
    pub sha256: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let experiment = EXPERIMENT_IDS
            .iter()
            .copied()
            .find(|id| *id == raw.experiment)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "experiment: unknown id `{}` (expected one of {})",
                    raw.experiment,
                    EXPERIMENT_IDS.join(", ")
                ))
            })?;
        if raw.realizations == 0 {
            return Err(CliError::Config("realizations: must be at least 1".into()));
        }
        let params = Params::parse(experiment, raw.params)?;
        let output = raw.output.unwrap_or_else(|| format!("{experiment}.csv"));
        if output.is_empty() || Path::new(&output).file_name().is_none() {
            return Err(CliError::Config(format!("output: `{output}` is not a file name")));
        }
        Ok(Self {
            experiment,
            seed: raw.seed,
            realizations: raw.realizations,
            output,
            params,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }
}

/// A list of sweep points, given either explicitly or as an evenly
/// (linearly or logarithmically) spaced range.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl GridSpec {
    pub fn resolve(&self, field: &str) -> Result<Vec<f64>, String> {
        match (&self.values, self.from, self.to, self.points) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(lo), Some(hi), Some(n)) if n >= 2 && lo < hi => match self.spacing {
                Spacing::Log if lo > 0.0 => Ok(tiedecay::stats::geomspace(lo, hi, n)),
                Spacing::Log => Err(format!("{field}: log spacing needs from > 0")),
                Spacing::Linear => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
            },
            _ => Err(format!(
                "{field}: give either a non-empty `values` list or `from` < `to` with `points` >= 2"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    #[default]
    AtLeast,
    StrictlyAbove,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySpec {
    #[default]
    MassConserving,
    ContinuousFlux,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum BackendSpec {
    #[default]
    Direct,
    PowerIteration,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveTrace {
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    #[serde(default)]
    pub s0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveMoments {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub checkpoints: Vec<u32>,
    /// Independent pairs simulated; defaults to `n (n - 1) / 2`.
    pub edges: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveGcc {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    #[serde(default)]
    pub s0: f64,
    pub g: GridSpec,
    #[serde(default)]
    pub mode: ModeSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct B2uTrace {
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    pub g: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct B2uComponents {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    pub g: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct B2uSweep {
    pub n: usize,
    pub alpha: f64,
    pub steps: u32,
    pub g: f64,
    pub p: GridSpec,
}

/// Random-walk and scheme parameters; `w` absent means unbounded.
#[derive(Debug, Clone, Copy)]
pub struct WalkSpec {
    pub dx: f64,
    pub dt: f64,
    pub delta: f64,
    pub w: Option<f64>,
    pub l: f64,
    pub t_total: f64,
    pub x0: f64,
}

macro_rules! walk_spec {
    ($t:ty) => {
        impl $t {
            pub fn walk(&self) -> WalkSpec {
                WalkSpec { dx: self.dx, dt: self.dt, delta: self.delta, w: self.w, l: self.l, t_total: self.t_total, x0: self.x0 }
            }
        }
    };
}
walk_spec!(WalkTrace);
walk_spec!(WalkStationary);
walk_spec!(FdEvolve);

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkTrace {
    pub dx: f64,
    pub dt: f64,
    pub delta: f64,
    pub w: Option<f64>,
    pub l: f64,
    pub t_total: f64,
    #[serde(default)]
    pub x0: f64,
    pub edges: usize,
    /// Record every `stride`-th step.
    #[serde(default = "one")]
    pub stride: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkStationary {
    pub dx: f64,
    pub dt: f64,
    pub delta: f64,
    pub w: Option<f64>,
    pub l: f64,
    pub t_total: f64,
    #[serde(default)]
    pub x0: f64,
    /// Nodes per realization; samples are the `nodes (nodes - 1) / 2` ties.
    pub nodes: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdEvolve {
    pub dx: f64,
    pub dt: f64,
    pub delta: f64,
    pub w: Option<f64>,
    pub l: f64,
    pub t_total: f64,
    #[serde(default)]
    pub x0: f64,
    /// Steps at which to record the field; the final step is always kept.
    #[serde(default)]
    pub snapshots: Vec<u64>,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdStationary {
    pub dx: f64,
    pub delta: f64,
    pub w: f64,
    pub l: f64,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default = "default_iterations")]
    pub max_iterations: u64,
}

fn default_iterations() -> u64 {
    10_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SirCompare {
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub n_p: u64,
    pub s0: u64,
    pub i0: u64,
    pub lambdas: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub enum Params {
    AdditiveTrace(AdditiveTrace),
    AdditiveMoments(AdditiveMoments),
    AdditiveGcc(AdditiveGcc),
    B2uTrace(B2uTrace),
    B2uSweep(B2uSweep),
    B2uComponents(B2uComponents),
    WalkTrace(WalkTrace),
    WalkStationary(WalkStationary),
    FdEvolve(FdEvolve),
    FdStationary(FdStationary),
    SirCompare(SirCompare),
}

fn block<T: DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("params: {}", e.message())))
}

impl Params {
    fn parse(id: &str, table: toml::Table) -> Result<Self, CliError> {
        Ok(match id {
            "ahmad-trace" => Self::AdditiveTrace(block(table)?),
            "ahmad-moments" => Self::AdditiveMoments(block(table)?),
            "ahmad-gcc" => Self::AdditiveGcc(block(table)?),
            "b2u-trace" => Self::B2uTrace(block(table)?),
            "b2u-gcc-sweep" => Self::B2uSweep(block(table)?),
            "b2u-components" => Self::B2uComponents(block(table)?),
            "walk-trace" => Self::WalkTrace(block(table)?),
            "walk-stationary" => Self::WalkStationary(block(table)?),
            "fd-evolve" => Self::FdEvolve(block(table)?),
            "fd-stationary" => Self::FdStationary(block(table)?),
            "sir-compare" => Self::SirCompare(block(table)?),
            other => unreachable!("unchecked experiment id {other}"),
        })
    }
}
