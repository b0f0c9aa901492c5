use std::path::{Path, PathBuf};

use anyhow::Result;
use automn_core::summary::{summarize, PosteriorSummary};
use serde::Serialize;

use crate::io::{self, invalid, InputDigest};

#[derive(Serialize)]
struct Report {
    summary: PosteriorSummary,
    acceptance_rates: Vec<f64>,
    completed_iterations: usize,
    truncated: bool,
    chain: InputDigest,
}

pub fn run(chain_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let chain = io::read_chain(chain_path)?;
    let summary = summarize(&chain.draws, &chain.param_names).map_err(invalid)?;
    for p in &summary.params {
        log::info!("{}: {:.4} [{:.4}, {:.4}]", p.name, p.mean, p.lower, p.upper);
    }
    let out = out.unwrap_or_else(|| {
        let stem = chain_path.file_stem().unwrap_or_default().to_string_lossy();
        chain_path.with_file_name(format!("summary_{stem}.json"))
    });
    io::write_json(
        &out,
        &Report {
            summary,
            acceptance_rates: chain.acceptance_rates(),
            completed_iterations: chain.completed_iterations,
            truncated: chain.truncated,
            chain: io::digests(&[chain_path])?.remove(0),
        },
    )
}
