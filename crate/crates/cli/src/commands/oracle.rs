use std::path::{Path, PathBuf};

use anyhow::Result;
use automn_core::oracle::ExactModel;
use automn_core::Params;
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::io::{self, invalid};
use crate::model::{self, Loaded};

#[derive(Serialize)]
struct Report {
    names: Vec<String>,
    theta: Vec<f64>,
    configurations: usize,
    log_z: f64,
    /// Mean and row-major covariance of the sufficient statistics.
    mean: Vec<f64>,
    cov: Vec<f64>,
    log_likelihood: f64,
}

pub fn run(path: &Path, theta: Option<Vec<f64>>, out: Option<PathBuf>) -> Result<()> {
    let cfg: RunConfig = config::load(path)?;
    let Loaded { spec, y, .. } = model::load_model(&cfg)?;
    let theta = match theta {
        Some(v) => Params::from_flat(spec.p(), spec.k(), v).map_err(invalid)?,
        None => Params::zeros(spec.p(), spec.k()),
    };
    let exact = ExactModel::new(&spec).map_err(invalid)?;
    let log_z = exact.log_z(&theta);
    let moments = exact.moments(&theta);
    let log_likelihood = spec.log_unnormalized(&theta, &y).map_err(invalid)? - log_z;
    let out = out.unwrap_or_else(|| cfg.output_dir.join("oracle.json"));
    if let Some(dir) = out.parent() {
        config::ensure_dir(dir)?;
    }
    io::write_json(
        &out,
        &Report {
            names: spec.param_names(),
            theta: theta.into_vec(),
            configurations: exact.n_configs(),
            log_z,
            mean: moments.mean,
            cov: moments.cov,
            log_likelihood,
        },
    )
}
