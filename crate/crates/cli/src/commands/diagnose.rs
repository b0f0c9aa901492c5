use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use automn_core::acd::{acd_statistic, draw_score_and_hessian, thinned_indices, AcdConfig, AcdResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::io::{self, invalid, InputDigest};
use crate::model::{self, Loaded};
use crate::Invalid;

#[derive(Serialize)]
struct Report<'a> {
    result: AcdResult,
    config: &'a AcdConfig,
    seed: u64,
    chain: InputDigest,
    inputs: Vec<InputDigest>,
}

pub fn run(chain_path: &Path, path: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg: RunConfig = config::load(path)?;
    cfg.acd.validate().map_err(invalid)?;
    let Loaded { spec, y, inputs, .. } = model::load_model(&cfg)?;
    let prior = model::prior(&cfg, &spec)?;
    let chain = io::read_chain(chain_path)?;
    if chain.p_total() != spec.p_total() {
        bail!(Invalid(format!(
            "chain has {} parameters, model has {}",
            chain.p_total(),
            spec.p_total()
        )));
    }
    if chain.n_draws() == 0 {
        bail!(Invalid("chain has no draws".into()));
    }
    // Each draw has its own stream, so the parallel result equals the
    // sequential one.
    let pairs = thinned_indices(chain.n_draws(), cfg.acd.thin)
        .into_par_iter()
        .map(|t| draw_score_and_hessian(&spec, &y, &prior, &cfg.acd, &chain, cfg.seed, t))
        .collect::<automn_core::Result<Vec<_>>>()
        .map_err(invalid)?;
    let result = acd_statistic(&pairs, cfg.acd.quantile, cfg.acd.rank_tolerance)?;
    log::info!(
        "T = {:.3}, dof = {}, threshold = {:.3}: {}",
        result.statistic,
        result.dof,
        result.threshold,
        if result.pass { "pass" } else { "fail" }
    );

    let mut paths: Vec<&Path> = vec![path];
    paths.extend(inputs.iter().map(|p| p.as_path()));
    let out = out.unwrap_or_else(|| {
        let stem = chain_path.file_stem().unwrap_or_default().to_string_lossy();
        cfg.output_dir.join(format!("acd_{stem}.json"))
    });
    if let Some(dir) = out.parent() {
        config::ensure_dir(dir)?;
    }
    io::write_json(
        &out,
        &Report {
            result,
            config: &cfg.acd,
            seed: cfg.seed,
            chain: io::digests(&[chain_path])?.remove(0),
            inputs: io::digests(&paths)?,
        },
    )
}
