use std::path::Path;

use anyhow::{bail, Result};
use automn_core::gibbs::{GibbsSampler, ScanOrder};
use automn_core::rng::{domain, substream, uniform};
use automn_core::simgen::{self, CarSpec, GpSpec};
use automn_core::{build_regular_grid, Arrangement, DesignMatrix, ModelSpec, Params};
use serde::Serialize;

use crate::config::{self, Generator, SimulateConfig};
use crate::io::{self, invalid};
use crate::render::{render_ppm, PALETTE};
use crate::Invalid;

#[derive(Serialize)]
struct Details {
    class_counts: Vec<usize>,
}

pub fn run(path: &Path) -> Result<()> {
    let cfg: SimulateConfig = config::load(path)?;
    let grid = automn_core::GridSpec::new(cfg.grid.rows, cfg.grid.cols, cfg.grid.connectivity).map_err(invalid)?;
    let n = grid.n_sites();
    let design = match &cfg.covariates {
        Some(c) => {
            let mut rng = substream(cfg.seed, domain::SIMULATION, 0);
            Some(simgen::simulate_covariates(n, &c.columns, c.intercept, &mut rng).map_err(invalid)?)
        }
        None => None,
    };
    let x = design.clone().unwrap_or_else(|| DesignMatrix::intercept_only(n));
    let y = generate(&cfg, &grid, &x)?;

    config::ensure_dir(&cfg.output_dir)?;
    let mut outputs = vec!["arrangement.csv".to_owned(), "arrangement.ppm".to_owned()];
    io::write_arrangement(&cfg.output_dir.join("arrangement.csv"), &y, Some(&grid))?;
    std::fs::write(cfg.output_dir.join("arrangement.ppm"), render_ppm(&y, &grid, &PALETTE, 4)?)?;
    if let Some(x) = &design {
        io::write_design(&cfg.output_dir.join("design.csv"), x)?;
        outputs.push("design.csv".to_owned());
    }
    super::write_manifest(
        &cfg.output_dir.join("manifest.json"),
        "simulate",
        Some(cfg.seed),
        &cfg,
        &[path],
        outputs,
        Details {
            class_counts: y.class_counts(cfg.k),
        },
    )
}

fn generate(cfg: &SimulateConfig, grid: &automn_core::GridSpec, x: &DesignMatrix) -> Result<Arrangement> {
    let n = grid.n_sites();
    let k = cfg.k;
    match &cfg.generator {
        Generator::Gibbs { theta, sweeps } => {
            let spec = ModelSpec::new(k, build_regular_grid(grid), x.clone()).map_err(invalid)?;
            let theta = Params::from_flat(x.p(), k, theta.clone()).map_err(invalid)?;
            let mut rng = substream(cfg.seed, domain::SIMULATION, 1);
            let mut labels: Vec<u32> = (0..n).map(|_| (uniform(&mut rng) * k as f64) as u32).collect();
            let mut sampler = GibbsSampler::new(&spec, &theta).map_err(invalid)?;
            sampler.run(&mut labels, *sweeps, ScanOrder::Raster, &mut rng);
            Ok(Arrangement::from_zero_based(labels))
        }
        Generator::Car { tau, rho, beta } => {
            if beta.len() + 1 != k {
                bail!(Invalid(format!("car generator needs {} coefficient vectors", k - 1)));
            }
            let car = CarSpec {
                tau: *tau,
                rho: *rho,
                graph: build_regular_grid(grid),
            };
            let factor = car.factor()?;
            let mut rng = substream(cfg.seed, domain::SIMULATION, 2);
            let phi: Vec<Vec<f64>> = (1..k)
                .map(|_| simgen::car_field_from_factor(&factor, n, &mut rng))
                .collect();
            let mut rng = substream(cfg.seed, domain::SIMULATION, 3);
            Ok(simgen::multinomial_logit_sample(x, beta, &phi, &mut rng).map_err(invalid)?)
        }
        Generator::Gp { length, exponent, beta } => {
            if beta.len() != k {
                bail!(Invalid(format!("gp generator needs {k} coefficient vectors")));
            }
            let spec = GpSpec {
                length: *length,
                exponent: *exponent,
                beta: beta.clone(),
            };
            let mut rng = substream(cfg.seed, domain::SIMULATION, 2);
            simgen::gp_mixture_sample(grid, x, &spec, &mut rng).map_err(crate::classify)
        }
    }
}
