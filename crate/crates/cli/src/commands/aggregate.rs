use std::io::Write;
use std::path::Path;

use anyhow::Result;
use automn_core::dataprep::{self, Standardization};
use automn_core::{Connectivity, GridSpec};
use serde::Serialize;

use crate::config::{self, AggregateConfig};
use crate::io::{self, invalid};

#[derive(Serialize)]
struct Details {
    points: usize,
    covariates: Vec<String>,
    class_counts: Vec<usize>,
    standardization: Option<Standardization>,
}

pub fn run(path: &Path) -> Result<()> {
    let cfg: AggregateConfig = config::load(path)?;
    cfg.spec.validate().map_err(invalid)?;
    let (points, names) = io::read_points(&cfg.input)?;
    let agg = dataprep::aggregate(&points, &cfg.spec, &names).map_err(invalid)?;
    let (design, standardization) = if cfg.standardize && agg.design.p() > 0 {
        let (x, s) = dataprep::standardize(&agg.design).map_err(invalid)?;
        (x, Some(s))
    } else {
        (agg.design.clone(), None)
    };
    let grid = GridSpec::new(cfg.spec.rows, cfg.spec.cols, Connectivity::Rook).map_err(invalid)?;

    let out = &cfg.output_dir;
    config::ensure_dir(out)?;
    io::write_arrangement(&out.join("arrangement.csv"), &agg.arrangement, Some(&grid))?;
    let mut outputs = vec!["arrangement.csv".to_owned(), "counts.csv".to_owned()];
    if design.p() > 0 {
        io::write_design(&out.join("design.csv"), &design)?;
        outputs.push("design.csv".to_owned());
    }
    let mut w = io::create(&out.join("counts.csv"))?;
    writeln!(w, "row,col,count")?;
    for (s, n) in agg.counts.iter().enumerate() {
        let (r, c) = grid.row_col(s);
        writeln!(w, "{},{},{n}", r + 1, c + 1)?;
    }
    w.flush()?;

    super::write_manifest(
        &out.join("manifest.json"),
        "aggregate",
        None,
        &cfg,
        &[path, &cfg.input],
        outputs,
        Details {
            points: points.len(),
            covariates: names,
            class_counts: agg.arrangement.class_counts(cfg.spec.k()),
            standardization,
        },
    )
}
