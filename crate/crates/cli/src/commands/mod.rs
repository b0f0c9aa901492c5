pub mod aggregate;
pub mod diagnose;
pub mod fit_dmh;
pub mod fit_mple;
pub mod oracle;
pub mod predict;
pub mod render;
pub mod simulate;
pub mod summarize;

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::io::{self, InputDigest};

/// Everything needed to re-run a subcommand bit-exactly.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, E: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub details: E,
}

pub fn write_manifest<C: Serialize, E: Serialize>(
    path: &Path,
    command: &str,
    seed: Option<u64>,
    config: &C,
    inputs: &[&Path],
    outputs: Vec<String>,
    details: E,
) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
        inputs: io::digests(inputs)?,
        outputs,
        details,
    };
    io::write_json(path, &manifest)
}
