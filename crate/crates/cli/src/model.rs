//! Building the model and data from a run configuration.

use std::path::PathBuf;

use anyhow::{bail, Result};
use automn_core::dmh::BlockSpec;
use automn_core::{build_regular_grid, Arrangement, DesignMatrix, GridSpec, ModelSpec, PriorSpec};

use crate::config::RunConfig;
use crate::io::{self, invalid};
use crate::Invalid;

pub struct Loaded {
    pub spec: ModelSpec,
    pub y: Arrangement,
    pub grid: Option<GridSpec>,
    /// Input files read, for manifests.
    pub inputs: Vec<PathBuf>,
}

pub fn load_model(cfg: &RunConfig) -> Result<Loaded> {
    let m = &cfg.model;
    let mut inputs = Vec::new();
    let (graph, grid) = match (&m.grid, &m.edges) {
        (Some(g), None) => {
            let g = GridSpec::new(g.rows, g.cols, g.connectivity).map_err(invalid)?;
            (build_regular_grid(&g), Some(g))
        }
        (None, Some(path)) => {
            let Some(n) = m.n_sites else {
                bail!(Invalid("an edge-list model needs n_sites".into()));
            };
            inputs.push(path.clone());
            (io::read_edges(path, n)?, None)
        }
        _ => bail!(Invalid("model needs exactly one of grid or edges".into())),
    };
    let n = graph.n_sites();
    let design = match &m.design {
        Some(path) => {
            inputs.push(path.clone());
            let x = io::read_design(path)?;
            if m.intercept {
                x.with_intercept()
            } else {
                x
            }
        }
        None => DesignMatrix::intercept_only(n),
    };
    let spec = ModelSpec::new(m.k, graph, design).map_err(invalid)?;
    inputs.push(cfg.data.clone());
    let file = io::read_arrangement(&cfg.data, m.k)?;
    if let (Some(g), Some((r, c))) = (&grid, file.dims) {
        if (g.rows, g.cols) != (r, c) {
            bail!(Invalid(format!(
                "data is {r}×{c} but the model grid is {}×{}",
                g.rows, g.cols
            )));
        }
    }
    spec.check_arrangement(&file.arrangement).map_err(invalid)?;
    Ok(Loaded {
        spec,
        y: file.arrangement,
        grid,
        inputs,
    })
}

pub fn prior(cfg: &RunConfig, spec: &ModelSpec) -> Result<PriorSpec> {
    let prior = cfg
        .prior
        .clone()
        .unwrap_or_else(|| PriorSpec::default_for(spec.p_total()));
    prior.validate(spec.p_total()).map_err(invalid)?;
    Ok(prior)
}

pub fn blocks(cfg: &RunConfig, spec: &ModelSpec) -> Result<BlockSpec> {
    let blocks = cfg
        .blocks
        .clone()
        .unwrap_or_else(|| BlockSpec::by_class(spec.p(), spec.k()));
    blocks.validate(spec.p_total()).map_err(invalid)?;
    Ok(blocks)
}
