use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use automn_core::dmh::{run_dmh, tune_scales, BlockSpec, DmhConfig, ProposalSpec};
use automn_core::mple::mple_fit;
use automn_core::Params;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{self, ProposalSource, RunConfig};
use crate::io::{self, invalid, InputDigest};
use crate::model::{self, Loaded};
use crate::Invalid;

static STOP: AtomicBool = AtomicBool::new(false);

/// Sidecar written next to every chain CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainMeta {
    pub param_names: Vec<String>,
    pub seed: u64,
    pub chain: u64,
    pub inner_sweeps: usize,
    pub outer_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub completed_iterations: usize,
    pub truncated: bool,
    pub accepted: Vec<usize>,
    pub attempted: Vec<usize>,
    pub acceptance_rates: Vec<f64>,
    pub blocks: BlockSpec,
    pub proposals: ProposalSpec,
    pub init: Vec<f64>,
    pub inputs: Vec<InputDigest>,
    pub config: RunConfig,
}

#[derive(Serialize)]
struct TuningReport<'a> {
    inner_sweeps: usize,
    converged: bool,
    rounds: usize,
    scales: Vec<f64>,
    /// Acceptance rates per round and block.
    history: &'a [Vec<f64>],
    targets: &'a [(f64, f64)],
}

#[derive(Serialize)]
struct Timing {
    inner_sweeps: usize,
    chain: u64,
    seconds: f64,
    seconds_per_iteration: f64,
}

pub fn run(path: &Path, chains: Option<usize>, m_list: Option<Vec<usize>>) -> Result<()> {
    let cfg: RunConfig = config::load(path)?;
    let Some(settings) = cfg.dmh.clone() else {
        bail!(Invalid("fit-dmh needs a `dmh` section in the config".into()));
    };
    let chains = chains.unwrap_or(settings.chains);
    let m_list = m_list
        .or_else(|| settings.m_list.clone())
        .unwrap_or_else(|| vec![settings.inner_sweeps]);
    if chains == 0 || m_list.is_empty() {
        bail!(Invalid("need at least one chain and one inner-sweep count".into()));
    }

    let Loaded { spec, y, inputs, .. } = model::load_model(&cfg)?;
    let p_total = spec.p_total();
    let prior = model::prior(&cfg, &spec)?;
    let blocks = model::blocks(&cfg, &spec)?;

    let needs_mple = cfg.init.is_none() || cfg.proposal.source == ProposalSource::Mple;
    let fit = if needs_mple {
        Some(mple_fit(&spec, &y, &cfg.mple).map_err(invalid)?)
    } else {
        None
    };
    let init = match (&cfg.init, &fit) {
        (Some(v), _) => Params::from_flat(spec.p(), spec.k(), v.clone()).map_err(invalid)?,
        (None, Some(f)) => f.theta_hat.clone(),
        (None, None) => unreachable!(),
    };
    let mut proposals = match cfg.proposal.source {
        ProposalSource::Mple => {
            let cov = fit
                .as_ref()
                .and_then(|f| f.covariance.as_ref())
                .ok_or_else(|| anyhow!("pseudolikelihood Hessian is singular; use an isotropic proposal"))?;
            ProposalSpec::from_covariance(cov, p_total, &blocks, cfg.proposal.scale)
        }
        ProposalSource::Isotropic => ProposalSpec::isotropic(&blocks, cfg.proposal.sd),
    };
    if let Some(scales) = &cfg.proposal.scales {
        if scales.len() != proposals.blocks.len() {
            bail!(Invalid(format!("{} scales for {} blocks", scales.len(), proposals.blocks.len())));
        }
        for (b, &s) in proposals.blocks.iter_mut().zip(scales) {
            b.scale = s;
        }
    }

    let base = |m: usize, chain: u64, proposals: ProposalSpec| DmhConfig {
        outer_iterations: settings.outer_iterations,
        burn_in: settings.burn_in,
        thin: settings.thin,
        inner_sweeps: m,
        seed: cfg.seed,
        chain,
        blocks: blocks.clone(),
        proposals,
        prior: prior.clone(),
    };
    base(m_list[0], 0, proposals.clone()).validate(p_total).map_err(invalid)?;

    let out = &cfg.output_dir;
    config::ensure_dir(out)?;
    let _ = ctrlc::set_handler(|| STOP.store(true, Ordering::SeqCst));

    // One tuning run per m, shared by that m's chains.
    let tuned: Vec<ProposalSpec> = match &cfg.tuning {
        Some(t) => m_list
            .par_iter()
            .map(|&m| -> Result<ProposalSpec> {
                let r = tune_scales(
                    &spec,
                    &y,
                    &base(m, 0, proposals.clone()),
                    &init,
                    &t.targets,
                    t.pilot_iterations,
                    t.max_rounds,
                )
                .map_err(invalid)?;
                if !r.converged {
                    log::warn!("tuning for m = {m} did not reach every band in {} rounds", r.rounds);
                }
                io::write_json(
                    &out.join(format!("tuning_m{m}.json")),
                    &TuningReport {
                        inner_sweeps: m,
                        converged: r.converged,
                        rounds: r.rounds,
                        scales: r.proposals.scales(),
                        history: &r.history,
                        targets: &t.targets,
                    },
                )?;
                Ok(r.proposals)
            })
            .collect::<Result<_>>()?,
        None => vec![proposals.clone(); m_list.len()],
    };

    let mut input_paths: Vec<&Path> = vec![path];
    input_paths.extend(inputs.iter().map(|p| p.as_path()));
    let digests = io::digests(&input_paths)?;

    let jobs: Vec<(usize, u64)> = (0..m_list.len())
        .flat_map(|i| (0..chains as u64).map(move |c| (i, c)))
        .collect();
    let timings = jobs
        .par_iter()
        .map(|&(i, c)| -> Result<Timing> {
            let m = m_list[i];
            let config = base(m, c, tuned[i].clone());
            let start = Instant::now();
            let chain = run_dmh(&spec, &y, &config, &init, Some(&STOP)).map_err(invalid)?;
            let seconds = start.elapsed().as_secs_f64();
            let stem = format!("chain_m{m}_c{c}");
            io::write_chain(&out.join(format!("{stem}.csv")), &chain)?;
            let meta = ChainMeta {
                param_names: chain.param_names.clone(),
                seed: chain.seed,
                chain: chain.chain,
                inner_sweeps: m,
                outer_iterations: settings.outer_iterations,
                burn_in: settings.burn_in,
                thin: settings.thin,
                completed_iterations: chain.completed_iterations,
                truncated: chain.truncated,
                accepted: chain.accepted.clone(),
                attempted: chain.attempted.clone(),
                acceptance_rates: chain.acceptance_rates(),
                blocks: config.blocks.clone(),
                proposals: config.proposals.clone(),
                init: init.as_slice().to_vec(),
                inputs: digests.clone(),
                config: cfg.clone(),
            };
            io::write_json(&out.join(format!("{stem}.json")), &meta)?;
            if chain.truncated {
                log::warn!("{stem} interrupted after {} iterations", chain.completed_iterations);
            }
            Ok(Timing {
                inner_sweeps: m,
                chain: c,
                seconds,
                seconds_per_iteration: seconds / chain.completed_iterations.max(1) as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_json(&out.join("timings.json"), &timings)?;
    if STOP.load(Ordering::SeqCst) {
        bail!("interrupted; partial chains written");
    }
    Ok(())
}
