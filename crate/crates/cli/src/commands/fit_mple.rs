use std::path::Path;

use anyhow::Result;
use automn_core::mple::{mple_fit, MpleResult};
use automn_core::ModelSpec;
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::io::invalid;
use crate::model::{self, Loaded};

#[derive(Debug, Serialize)]
pub struct MpleReport {
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub neg_log_pl: f64,
    pub gradient_norm: f64,
    pub hessian: Vec<f64>,
    pub covariance: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub used_gradient_step: bool,
}

impl MpleReport {
    pub fn new(spec: &ModelSpec, fit: &MpleResult) -> Self {
        Self {
            names: spec.param_names(),
            theta: fit.theta_hat.as_slice().to_vec(),
            neg_log_pl: fit.neg_log_pl,
            gradient_norm: fit.gradient_norm,
            hessian: fit.hessian.clone(),
            covariance: fit.covariance.clone(),
            converged: fit.converged,
            iterations: fit.iterations,
            used_gradient_step: fit.used_gradient_step,
        }
    }
}

pub fn run(path: &Path) -> Result<()> {
    let cfg: RunConfig = config::load(path)?;
    let Loaded { spec, y, inputs, .. } = model::load_model(&cfg)?;
    let fit = mple_fit(&spec, &y, &cfg.mple).map_err(invalid)?;
    if !fit.converged {
        log::warn!("MPLE stopped after {} iterations without converging", fit.iterations);
    }
    config::ensure_dir(&cfg.output_dir)?;
    let report = MpleReport::new(&spec, &fit);
    crate::io::write_json(&cfg.output_dir.join("mple.json"), &report)?;
    let mut paths: Vec<&Path> = vec![path];
    paths.extend(inputs.iter().map(|p| p.as_path()));
    super::write_manifest(
        &cfg.output_dir.join("manifest_fit_mple.json"),
        "fit-mple",
        None,
        &cfg,
        &paths,
        vec!["mple.json".to_owned()],
        (),
    )
}
