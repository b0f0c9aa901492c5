//! JSON run configurations. Relative paths resolve against the directory of
//! the config file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use automn_core::acd::AcdConfig;
use automn_core::dmh::BlockSpec;
use automn_core::mple::MpleOptions;
use automn_core::simgen::ColumnSpec;
use automn_core::{GridSpec, PriorSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k: usize,
    /// Regular lattice; mutually exclusive with `edges`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Edge list CSV (`i,j`, 1-based sites) for arbitrary graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    /// Covariate CSV; intercept-only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<PathBuf>,
    /// Prepend an all-ones column to `design`.
    #[serde(default)]
    pub intercept: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalSource {
    /// Sub-blocks of the inverse pseudolikelihood Hessian.
    #[default]
    Mple,
    Isotropic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    pub source: ProposalSource,
    /// Initial scale for every block.
    pub scale: f64,
    /// Per-coordinate sd of the isotropic proposal.
    pub sd: f64,
    /// Per-block scales overriding `scale`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            source: ProposalSource::Mple,
            scale: 1.0,
            sd: 0.1,
            scales: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    /// Acceptance band per block.
    pub targets: Vec<(f64, f64)>,
    #[serde(default = "default_pilot")]
    pub pilot_iterations: usize,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
}

fn default_pilot() -> usize {
    1000
}

fn default_rounds() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmhSettings {
    pub outer_iterations: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    pub inner_sweeps: usize,
    #[serde(default = "one")]
    pub chains: usize,
    /// Run one set of chains per inner-sweep count instead of `inner_sweeps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSettings {
    pub sweeps: usize,
    pub cell_px: usize,
}

impl Default for PredictSettings {
    fn default() -> Self {
        Self { sweeps: 500, cell_px: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Observed arrangement CSV.
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockSpec>,
    #[serde(default)]
    pub proposal: ProposalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningConfig>,
    /// Starting point; the MPLE when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default)]
    pub mple: MpleOptions,
    /// Required by `fit-dmh` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmh: Option<DmhSettings>,
    #[serde(default)]
    pub acd: AcdConfig,
    #[serde(default)]
    pub predict: PredictSettings,
    pub seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateConfig {
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub intercept: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Generator {
    /// Automultinomial field by Gibbs sampling from a uniform random start.
    Gibbs { theta: Vec<f64>, sweeps: usize },
    /// Multinomial logit with CAR random effects; `beta[c]` is class `c + 2`.
    Car { tau: f64, rho: f64, beta: Vec<Vec<f64>> },
    /// Argmax of latent Gaussian processes; one `beta` per class.
    Gp { length: f64, exponent: f64, beta: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: GridSpec,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<CovariateConfig>,
    pub generator: Generator,
    pub seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    /// Point CSV with header `x,y,class,<covariates…>`.
    pub input: PathBuf,
    pub spec: automn_core::dataprep::AggregationSpec,
    #[serde(default)]
    pub standardize: bool,
    pub output_dir: PathBuf,
}

/// Parse a JSON config and resolve relative paths against its directory.
pub fn load<T: DeserializeOwned + Resolve>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: T = serde_json::from_str(&text)
        .map_err(|e| Invalid(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.resolve(base);
    Ok(cfg)
}

pub trait Resolve {
    fn resolve(&mut self, base: &Path);
}

fn join(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Resolve for RunConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.data);
        join(base, &mut self.output_dir);
        if let Some(d) = &mut self.model.design {
            join(base, d);
        }
        if let Some(e) = &mut self.model.edges {
            join(base, e);
        }
    }
}

impl Resolve for SimulateConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.output_dir);
    }
}

impl Resolve for AggregateConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.input);
        join(base, &mut self.output_dir);
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
