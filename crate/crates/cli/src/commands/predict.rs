use std::path::Path;

use anyhow::{bail, Result};
use automn_core::gibbs::{GibbsSampler, ScanOrder};
use automn_core::rng::{domain, substream, uniform};
use automn_core::summary::PosteriorSummary;
use automn_core::{Arrangement, Params};
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::io::{self, invalid};
use crate::model::{self, Loaded};
use crate::render::{render_ppm, PALETTE};
use crate::Invalid;

#[derive(Serialize)]
struct Details {
    theta: Vec<f64>,
    sweeps: usize,
    class_counts: Vec<usize>,
    /// Share of sites whose predicted label equals the observed one.
    agreement_with_data: f64,
}

/// Posterior mean from a summary JSON or a chain CSV.
fn posterior_mean(path: &Path, names: &[String]) -> Result<Vec<f64>> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    let (got, mean): (Vec<String>, Vec<f64>) = if is_json {
        let text = std::fs::read_to_string(path)?;
        let s: SummaryFile = serde_json::from_str(&text)
            .map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
        s.summary.params.into_iter().map(|p| (p.name, p.mean)).unzip()
    } else {
        let chain = io::read_chain(path)?;
        let (n, d) = (chain.n_draws(), chain.p_total());
        if n == 0 {
            bail!(Invalid(format!("{} has no draws", path.display())));
        }
        let mut mean = vec![0.0; d];
        for t in 0..n {
            for (m, v) in mean.iter_mut().zip(chain.draw(t)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        (chain.param_names, mean)
    };
    if got != names {
        bail!(Invalid(format!(
            "posterior parameters {got:?} do not match the model's {names:?}"
        )));
    }
    Ok(mean)
}

#[derive(serde::Deserialize)]
struct SummaryFile {
    summary: PosteriorSummary,
}

pub fn run(posterior: &Path, path: &Path, sweeps: Option<usize>) -> Result<()> {
    let cfg: RunConfig = config::load(path)?;
    let Loaded { spec, y, grid, inputs } = model::load_model(&cfg)?;
    let mean = posterior_mean(posterior, &spec.param_names())?;
    let theta = Params::from_flat(spec.p(), spec.k(), mean).map_err(invalid)?;
    let sweeps = sweeps.unwrap_or(cfg.predict.sweeps);

    let k = spec.k();
    let mut rng = substream(cfg.seed, domain::PREDICTION, 0);
    let mut labels: Vec<u32> = (0..spec.n_sites())
        .map(|_| ((uniform(&mut rng) * k as f64) as u32).min(k as u32 - 1))
        .collect();
    let mut sampler = GibbsSampler::new(&spec, &theta).map_err(invalid)?;
    sampler.run(&mut labels, sweeps, ScanOrder::Raster, &mut rng);
    let pred = Arrangement::from_zero_based(labels);

    let out = &cfg.output_dir;
    config::ensure_dir(out)?;
    io::write_arrangement(&out.join("prediction.csv"), &pred, grid.as_ref())?;
    let mut outputs = vec!["prediction.csv".to_owned()];
    if let Some(g) = &grid {
        std::fs::write(out.join("prediction.ppm"), render_ppm(&pred, g, &PALETTE, cfg.predict.cell_px)?)?;
        outputs.push("prediction.ppm".to_owned());
    }
    let same = pred.labels().iter().zip(y.labels()).filter(|(a, b)| a == b).count();
    let mut paths: Vec<&Path> = vec![path, posterior];
    paths.extend(inputs.iter().map(|p| p.as_path()));
    super::write_manifest(
        &out.join("manifest_predict.json"),
        "predict",
        Some(cfg.seed),
        &cfg,
        &paths,
        outputs,
        Details {
            theta: theta.as_slice().to_vec(),
            sweeps,
            class_counts: pred.class_counts(k),
            agreement_with_data: same as f64 / y.len() as f64,
        },
    )
}
