//! Double Metropolis–Hastings sampling of `π(θ | y) ∝ p(θ) h(y|θ) / Z(θ)`.
//!
//! Each block update proposes `θ′` from a Gaussian random walk on the block's
//! coordinates, runs `m` raster Gibbs sweeps at `θ′` starting from the observed
//! arrangement, and treats the final state `z` as an exact draw from
//! `f(·|θ′)`. The normalizers then cancel and
//!
//! ```text
//! log α = log p(θ′) − log p(θ) + (θ′ − θ)·s(y) + (θ − θ′)·s(z).
//! ```
//!
//! Stream layout per chain: the proposal stream supplies, per block update,
//! the block's standard normals followed by one acceptance uniform (drawn even
//! when the proposal leaves the prior support); the auxiliary stream feeds the
//! inner Gibbs sampler only.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicBool, Ordering};
use rand::Rng;

use crate::gibbs::{GibbsSampler, ScanOrder};
use crate::linalg;
use crate::math;
use crate::model::{Arrangement, ModelSpec, Params, SuffStats};
use crate::prior::PriorSpec;
use crate::rng::{domain, std_normal, substream, uniform, Stream};
use crate::{Error, Result};

/// Disjoint index sets over the flattened `θ`, updated in order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockSpec {
    pub blocks: Vec<Vec<usize>>,
}

impl BlockSpec {
    /// One block per non-reference class, then `γ` alone.
    pub fn by_class(p: usize, k: usize) -> Self {
        let mut blocks: Vec<Vec<usize>> = (1..k).map(|c| ((c - 1) * p..c * p).collect()).collect();
        blocks.push(vec![p * (k - 1)]);
        Self { blocks }
    }

    /// All parameters in a single block.
    pub fn joint(p_total: usize) -> Self {
        Self {
            blocks: vec![(0..p_total).collect()],
        }
    }

    pub fn validate(&self, p_total: usize) -> Result<()> {
        let mut seen = vec![false; p_total];
        for block in &self.blocks {
            if block.is_empty() {
                return Err(Error::InvalidArgument(String::from("empty parameter block")));
            }
            for &j in block {
                if j >= p_total || seen[j] {
                    return Err(Error::InvalidArgument(format!(
                        "blocks must cover 0..{p_total} exactly once (index {j})"
                    )));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("parameter {j} belongs to no block")));
        }
        Ok(())
    }
}

/// Gaussian random-walk proposal for one block: covariance `scale · cov`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockProposal {
    /// Row-major `b × b` base covariance.
    pub cov: Vec<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProposalSpec {
    pub blocks: Vec<BlockProposal>,
}

impl ProposalSpec {
    /// Take the sub-blocks of a full `p_total × p_total` covariance (normally
    /// the inverse pseudolikelihood Hessian).
    pub fn from_covariance(cov: &[f64], p_total: usize, blocks: &BlockSpec, scale: f64) -> Self {
        let blocks = blocks
            .blocks
            .iter()
            .map(|idx| BlockProposal {
                cov: idx
                    .iter()
                    .flat_map(|&a| idx.iter().map(move |&b| cov[a * p_total + b]))
                    .collect(),
                scale,
            })
            .collect();
        Self { blocks }
    }

    /// Independent `sd²` on every coordinate.
    pub fn isotropic(blocks: &BlockSpec, sd: f64) -> Self {
        let blocks = blocks
            .blocks
            .iter()
            .map(|idx| {
                let b = idx.len();
                let mut cov = vec![0.0; b * b];
                for a in 0..b {
                    cov[a * b + a] = sd * sd;
                }
                BlockProposal { cov, scale: 1.0 }
            })
            .collect();
        Self { blocks }
    }

    pub fn scales(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.scale).collect()
    }

    fn prepare(&self, blocks: &BlockSpec) -> Result<Vec<PreparedProposal>> {
        if self.blocks.len() != blocks.blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} proposals for {} blocks",
                self.blocks.len(),
                blocks.blocks.len()
            )));
        }
        self.blocks
            .iter()
            .zip(&blocks.blocks)
            .map(|(prop, idx)| PreparedProposal::new(prop, idx))
            .collect()
    }
}

/// A block proposal with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct PreparedProposal {
    indices: Vec<usize>,
    chol: Vec<f64>,
    step_sd: f64,
}

impl PreparedProposal {
    pub fn new(proposal: &BlockProposal, indices: &[usize]) -> Result<Self> {
        let b = indices.len();
        if proposal.cov.len() != b * b {
            return Err(Error::DimensionMismatch(format!(
                "proposal covariance has {} entries for a block of {b}",
                proposal.cov.len()
            )));
        }
        if !(proposal.scale >= 0.0 && proposal.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "proposal scale {} must be finite and non-negative",
                proposal.scale
            )));
        }
        for a in 0..b {
            for c in 0..a {
                if (proposal.cov[a * b + c] - proposal.cov[c * b + a]).abs()
                    > 1e-10 * (1.0 + proposal.cov[a * b + c].abs())
                {
                    return Err(Error::NotPositiveDefinite(String::from(
                        "proposal covariance is not symmetric",
                    )));
                }
            }
        }
        Ok(Self {
            indices: indices.to_vec(),
            chol: linalg::cholesky(b, &proposal.cov)?,
            step_sd: math::sqrt(proposal.scale),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `θ′ = θ + √scale · L ξ` on the block coordinates.
    pub fn propose<R: Rng + ?Sized>(&self, theta: &Params, rng: &mut R) -> Params {
        let b = self.indices.len();
        let xi: Vec<f64> = (0..b).map(|_| std_normal(rng)).collect();
        let delta = linalg::lower_mul(b, &self.chol, &xi);
        let mut next = theta.clone();
        for (&j, dj) in self.indices.iter().zip(&delta) {
            next.as_mut_slice()[j] += self.step_sd * dj;
        }
        next
    }
}

/// Proposal and auxiliary generators of one chain.
#[derive(Debug, Clone)]
pub struct ChainStreams {
    pub proposal: Stream,
    pub aux: Stream,
}

impl ChainStreams {
    pub fn for_chain(seed: u64, chain: u64) -> Self {
        Self {
            proposal: substream(seed, domain::CHAIN_PROPOSAL, chain),
            aux: substream(seed, domain::CHAIN_AUX, chain),
        }
    }

    fn for_tuning(seed: u64, chain: u64, round: u64) -> Self {
        let index = (chain << 16) | round;
        Self {
            proposal: substream(seed, domain::TUNING_PROPOSAL, index),
            aux: substream(seed, domain::TUNING_AUX, index),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub theta: Params,
    pub accepted: bool,
    pub log_alpha: f64,
    /// `s(z)` of the auxiliary draw; `None` when no inner sampling ran.
    pub z_stats: Option<SuffStats>,
}

/// DMH transition state bound to one data set: caches `s(y)` and reuses the
/// Gibbs kernel and auxiliary buffer between updates.
pub struct DmhKernel<'a> {
    spec: &'a ModelSpec,
    y: &'a Arrangement,
    s_y: SuffStats,
    sampler: GibbsSampler<'a>,
    z: Vec<u32>,
}

impl<'a> DmhKernel<'a> {
    pub fn new(spec: &'a ModelSpec, y: &'a Arrangement) -> Result<Self> {
        let s_y = spec.suff_stats(y)?;
        let sampler = GibbsSampler::new(spec, &Params::zeros(spec.p(), spec.k()))?;
        Ok(Self {
            spec,
            y,
            s_y,
            sampler,
            z: y.labels().to_vec(),
        })
    }

    pub fn observed_stats(&self) -> &SuffStats {
        &self.s_y
    }

    pub fn step(
        &mut self,
        theta: &Params,
        proposal: &PreparedProposal,
        prior: &PriorSpec,
        inner_sweeps: usize,
        streams: &mut ChainStreams,
    ) -> Result<StepOutcome> {
        let candidate = proposal.propose(theta, &mut streams.proposal);
        let u = uniform(&mut streams.proposal);
        let reject = |log_alpha| StepOutcome {
            theta: theta.clone(),
            accepted: false,
            log_alpha,
            z_stats: None,
        };
        if candidate.as_slice().iter().any(|v| !v.is_finite()) {
            log::warn!("non-finite DMH proposal rejected");
            return Ok(reject(f64::NEG_INFINITY));
        }
        let log_prior_new = prior.log_density(candidate.as_slice());
        if log_prior_new == f64::NEG_INFINITY {
            return Ok(reject(f64::NEG_INFINITY));
        }

        self.sampler.set_params(&candidate)?;
        self.z.copy_from_slice(self.y.labels());
        self.sampler
            .run(&mut self.z, inner_sweeps, ScanOrder::Raster, &mut streams.aux);
        let s_z = self.spec.suff_stats_unchecked(&self.z);

        let log_alpha = log_prior_new - prior.log_density(theta.as_slice())
            + dmh_log_ratio(theta.as_slice(), candidate.as_slice(), self.s_y.as_slice(), s_z.as_slice());
        let accepted = math::ln(u) < log_alpha;
        Ok(StepOutcome {
            theta: if accepted { candidate } else { theta.clone() },
            accepted,
            log_alpha,
            z_stats: Some(s_z),
        })
    }
}

/// Likelihood part of the DMH ratio, `(θ′ − θ)·(s(y) − s(z))`. It involves
/// sufficient statistics only; no normalizing constant appears.
pub fn dmh_log_ratio(theta: &[f64], candidate: &[f64], s_y: &[f64], s_z: &[f64]) -> f64 {
    theta
        .iter()
        .zip(candidate)
        .zip(s_y.iter().zip(s_z))
        .map(|((t, c), (sy, sz))| (c - t) * (sy - sz))
        .sum()
}

/// One block update. Builds a fresh kernel; loops should hold a [`DmhKernel`].
#[allow(clippy::too_many_arguments)]
pub fn dmh_block_step(
    spec: &ModelSpec,
    y: &Arrangement,
    theta: &Params,
    block: &[usize],
    proposal: &BlockProposal,
    prior: &PriorSpec,
    inner_sweeps: usize,
    streams: &mut ChainStreams,
) -> Result<StepOutcome> {
    spec.check_params(theta)?;
    let prepared = PreparedProposal::new(proposal, block)?;
    DmhKernel::new(spec, y)?.step(theta, &prepared, prior, inner_sweeps, streams)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DmhConfig {
    pub outer_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Gibbs sweeps of the inner sampler (`m`).
    pub inner_sweeps: usize,
    pub seed: u64,
    /// Chain index selecting the random streams.
    #[cfg_attr(feature = "serde", serde(default))]
    pub chain: u64,
    pub blocks: BlockSpec,
    pub proposals: ProposalSpec,
    pub prior: PriorSpec,
}

impl DmhConfig {
    pub fn validate(&self, p_total: usize) -> Result<()> {
        if self.burn_in > self.outer_iterations {
            return Err(Error::InvalidArgument(format!(
                "burn-in {} exceeds {} outer iterations",
                self.burn_in, self.outer_iterations
            )));
        }
        if self.thin == 0 || self.inner_sweeps == 0 {
            return Err(Error::InvalidArgument(String::from(
                "thin and inner sweeps must be at least 1",
            )));
        }
        self.blocks.validate(p_total)?;
        self.prior.validate(p_total)?;
        self.proposals.prepare(&self.blocks).map(|_| ())
    }
}

/// Retained draws and run bookkeeping of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub param_names: Vec<String>,
    /// Row-major `T × p_total`.
    pub draws: Vec<f64>,
    /// 1-based outer iteration of each retained draw.
    pub iterations: Vec<usize>,
    /// `log h(y | θ)` at each retained draw.
    pub log_h: Vec<f64>,
    /// Per-block acceptance flags of the iteration that produced each draw.
    pub block_accepts: Vec<Vec<bool>>,
    pub accepted: Vec<usize>,
    pub attempted: Vec<usize>,
    pub seed: u64,
    pub chain: u64,
    pub inner_sweeps: usize,
    pub completed_iterations: usize,
    /// The run stopped early on request; draws up to that point are kept.
    pub truncated: bool,
}

impl ChainOutput {
    pub fn p_total(&self) -> usize {
        self.param_names.len()
    }

    pub fn n_draws(&self) -> usize {
        self.iterations.len()
    }

    pub fn draw(&self, t: usize) -> &[f64] {
        let d = self.p_total();
        &self.draws[t * d..(t + 1) * d]
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .zip(&self.attempted)
            .map(|(&a, &n)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
            .collect()
    }
}

/// Run one DMH chain from `init`. Setting `stop` ends the run after the
/// current outer iteration and marks the output as truncated.
pub fn run_dmh(
    spec: &ModelSpec,
    y: &Arrangement,
    config: &DmhConfig,
    init: &Params,
    stop: Option<&AtomicBool>,
) -> Result<ChainOutput> {
    let mut streams = ChainStreams::for_chain(config.seed, config.chain);
    run_with_streams(spec, y, config, init, &mut streams, stop).map(|(out, _)| out)
}

fn run_with_streams(
    spec: &ModelSpec,
    y: &Arrangement,
    config: &DmhConfig,
    init: &Params,
    streams: &mut ChainStreams,
    stop: Option<&AtomicBool>,
) -> Result<(ChainOutput, Params)> {
    spec.check_params(init)?;
    config.validate(spec.p_total())?;
    let proposals = config.proposals.prepare(&config.blocks)?;
    let mut kernel = DmhKernel::new(spec, y)?;
    let n_blocks = proposals.len();
    let mut theta = init.clone();
    let capacity = (config.outer_iterations - config.burn_in) / config.thin;
    let mut out = ChainOutput {
        param_names: spec.param_names(),
        draws: Vec::with_capacity(capacity * spec.p_total()),
        iterations: Vec::with_capacity(capacity),
        log_h: Vec::with_capacity(capacity),
        block_accepts: Vec::with_capacity(capacity),
        accepted: vec![0; n_blocks],
        attempted: vec![0; n_blocks],
        seed: config.seed,
        chain: config.chain,
        inner_sweeps: config.inner_sweeps,
        completed_iterations: 0,
        truncated: false,
    };
    let mut flags = vec![false; n_blocks];
    for iter in 1..=config.outer_iterations {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            out.truncated = true;
            break;
        }
        for (b, proposal) in proposals.iter().enumerate() {
            let outcome = kernel.step(&theta, proposal, &config.prior, config.inner_sweeps, streams)?;
            flags[b] = outcome.accepted;
            out.attempted[b] += 1;
            if outcome.accepted {
                out.accepted[b] += 1;
                theta = outcome.theta;
            }
        }
        out.completed_iterations = iter;
        if iter > config.burn_in && (iter - config.burn_in) % config.thin == 0 {
            out.draws.extend_from_slice(theta.as_slice());
            out.iterations.push(iter);
            out.log_h
                .push(math::dot(theta.as_slice(), kernel.observed_stats().as_slice()));
            out.block_accepts.push(flags.clone());
        }
    }
    Ok((out, theta))
}

/// Outcome of pilot tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub proposals: ProposalSpec,
    /// Every block ended inside its band.
    pub converged: bool,
    pub rounds: usize,
    /// Pilot acceptance rates per round.
    pub history: Vec<Vec<f64>>,
}

pub const TUNE_UP: f64 = 1.5;
pub const TUNE_DOWN: f64 = 0.6;

/// One tuning move: widen the proposal when acceptance is above the band,
/// narrow it when below.
pub fn adjust_scale(scale: f64, rate: f64, (low, high): (f64, f64)) -> f64 {
    if rate > high {
        scale * TUNE_UP
    } else if rate < low {
        scale * TUNE_DOWN
    } else {
        scale
    }
}

/// Adjust per-block proposal scales over pilot runs until every block's
/// acceptance rate falls within its `(low, high)` band.
///
/// Each round runs `pilot_iterations` outer iterations on a dedicated tuning
/// stream, continuing from the previous round's final state; these draws are
/// discarded. Returns the best round's scales (smallest total distance to the
/// bands) with `converged = false` if `max_rounds` pass without success.
pub fn tune_scales(
    spec: &ModelSpec,
    y: &Arrangement,
    config: &DmhConfig,
    init: &Params,
    targets: &[(f64, f64)],
    pilot_iterations: usize,
    max_rounds: usize,
) -> Result<TuneResult> {
    if pilot_iterations < 500 {
        return Err(Error::InvalidArgument(format!(
            "pilot runs need at least 500 outer iterations, got {pilot_iterations}"
        )));
    }
    if targets.len() != config.blocks.blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} acceptance bands for {} blocks",
            targets.len(),
            config.blocks.blocks.len()
        )));
    }
    let mut pilot = config.clone();
    pilot.outer_iterations = pilot_iterations;
    pilot.burn_in = 0;
    pilot.thin = pilot_iterations;
    let mut theta = init.clone();
    let mut history = Vec::new();
    let mut best: Option<(f64, ProposalSpec)> = None;
    for round in 0..max_rounds {
        let mut streams = ChainStreams::for_tuning(config.seed, config.chain, round as u64);
        let (out, last) = run_with_streams(spec, y, &pilot, &theta, &mut streams, None)?;
        theta = last;
        let rates = out.acceptance_rates();
        let distance: f64 = rates
            .iter()
            .zip(targets)
            .map(|(&r, &(lo, hi))| (lo - r).max(0.0) + (r - hi).max(0.0))
            .sum();
        history.push(rates.clone());
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, pilot.proposals.clone()));
        }
        if distance == 0.0 {
            return Ok(TuneResult {
                proposals: pilot.proposals,
                converged: true,
                rounds: round + 1,
                history,
            });
        }
        for ((block, &r), &band) in pilot.proposals.blocks.iter_mut().zip(&rates).zip(targets) {
            block.scale = adjust_scale(block.scale, r, band);
        }
    }
    log::warn!("proposal tuning did not reach the acceptance bands in {max_rounds} rounds");
    Ok(TuneResult {
        proposals: best.map(|(_, p)| p).unwrap_or(pilot.proposals),
        converged: false,
        rounds: max_rounds,
        history,
    })
}
