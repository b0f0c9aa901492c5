//! Curvature diagnostic for approximate posterior samples.
//!
//! Under the target posterior `π̃(θ) ∝ p(θ) f(y|θ)` the second Bartlett
//! identity gives `E[∇²log π̃ + ∇log π̃ ∇log π̃ᵀ] = 0`. Each draw contributes
//! `B_t = H_t + g_t g_tᵀ`; the half-vectorized average is studentized by the
//! sample covariance of the `vech(B_t)` and compared against a χ² reference
//! whose degrees of freedom are the retained rank of that covariance.
//!
//! Derivatives of `log Z` come from exponential-family identities,
//! `∇log Z = E_θ[s]` and `∇²log Z = Cov_θ[s]`, estimated with auxiliary Gibbs
//! draws at each `θ_t`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::chisq::chi_square_quantile;
use crate::dmh::ChainOutput;
use crate::gibbs::{GibbsSampler, ScanOrder};
use crate::linalg;
use crate::model::{Arrangement, ModelSpec, Params};
use crate::prior::PriorSpec;
use crate::rng::{domain, substream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AcdConfig {
    /// Auxiliary arrangements per draw (`L`).
    pub aux_samples: usize,
    /// Sweeps between consecutive auxiliary arrangements.
    pub aux_sweeps: usize,
    /// Sweeps from `y` before the first auxiliary arrangement.
    pub aux_burn_sweeps: usize,
    pub thin: usize,
    pub quantile: f64,
    pub rank_tolerance: f64,
}

impl Default for AcdConfig {
    fn default() -> Self {
        Self {
            aux_samples: 500,
            aux_sweeps: 5,
            aux_burn_sweeps: 50,
            thin: 1,
            quantile: 0.99,
            rank_tolerance: 1e-10,
        }
    }
}

impl AcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aux_samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 auxiliary samples for a covariance, got {}",
                self.aux_samples
            )));
        }
        if self.aux_sweeps == 0 || self.thin == 0 {
            return Err(Error::InvalidArgument(String::from("aux_sweeps and thin must be positive")));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidArgument(format!("quantile {} not in (0, 1)", self.quantile)));
        }
        if !(self.rank_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(String::from("rank_tolerance must be non-negative")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcdResult {
    pub statistic: f64,
    pub dof: usize,
    pub threshold: f64,
    pub quantile: f64,
    pub pass: bool,
    pub n_draws: usize,
    pub r_nominal: usize,
}

/// Score and Hessian of `log π̃` at one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHessian {
    pub g: Vec<f64>,
    /// Row-major `p_total × p_total`.
    pub h: Vec<f64>,
}

pub fn r_nominal(p_total: usize) -> usize {
    p_total * (p_total + 1) / 2
}

/// Lower triangle of a symmetric `n × n` matrix, row by row.
pub fn vech(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(r_nominal(n));
    for i in 0..n {
        for j in 0..=i {
            out.push(a[i * n + j]);
        }
    }
    out
}

pub fn unvech(n: usize, v: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            a[i * n + j] = v[idx];
            a[j * n + i] = v[idx];
            idx += 1;
        }
    }
    a
}

/// Monte Carlo score and Hessian at `θ` using auxiliary Gibbs draws started
/// from `y`.
pub fn score_and_hessian<R: Rng + ?Sized>(
    spec: &ModelSpec,
    theta: &Params,
    y: &Arrangement,
    prior: &PriorSpec,
    config: &AcdConfig,
    rng: &mut R,
) -> Result<ScoreHessian> {
    config.validate()?;
    spec.check_arrangement(y)?;
    let d = spec.p_total();
    prior.validate(d)?;
    let mut sampler = GibbsSampler::new(spec, theta)?;
    let mut z = y.labels().to_vec();
    sampler.run(&mut z, config.aux_burn_sweeps, ScanOrder::Raster, rng);

    let l = config.aux_samples;
    let mut stats = Vec::with_capacity(l * d);
    for _ in 0..l {
        sampler.run(&mut z, config.aux_sweeps, ScanOrder::Raster, rng);
        stats.extend_from_slice(spec.suff_stats_unchecked(&z).as_slice());
    }
    let (mean, cov) = mean_and_cov(&stats, d);
    let s_y = spec.suff_stats_unchecked(y.labels());
    Ok(with_prior(prior, theta.as_slice(), s_y.as_slice(), &mean, &cov))
}

/// Score and Hessian from given moments of `s` under `f(·|θ)`.
pub fn score_and_hessian_from_moments(
    prior: &PriorSpec,
    theta: &[f64],
    s_y: &[f64],
    mean: &[f64],
    cov: &[f64],
) -> ScoreHessian {
    with_prior(prior, theta, s_y, mean, cov)
}

fn with_prior(prior: &PriorSpec, theta: &[f64], s_y: &[f64], mean: &[f64], cov: &[f64]) -> ScoreHessian {
    let d = theta.len();
    let grad_prior = prior.grad_log_density(theta);
    let hess_prior = prior.hessian_diag_log_density();
    let g = (0..d).map(|j| s_y[j] - mean[j] + grad_prior[j]).collect();
    let mut h: Vec<f64> = cov.iter().map(|c| -c).collect();
    for j in 0..d {
        h[j * d + j] += hess_prior[j];
    }
    ScoreHessian { g, h }
}

/// Mean and unbiased covariance of the rows of a row-major `n × d` matrix.
fn mean_and_cov(rows: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() / d;
    let mut mean = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        for j in 0..d {
            centered[j] = row[j] - mean[j];
        }
        for a in 0..d {
            for b in 0..=a {
                cov[a * d + b] += centered[a] * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in 0..=a {
            cov[a * d + b] /= denom;
            cov[b * d + a] = cov[a * d + b];
        }
    }
    (mean, cov)
}

/// The test statistic over per-draw score/Hessian pairs.
///
/// When every `vech(B_t)` is the same zero vector there is nothing to
/// studentize; the statistic is then 0 and the nominal degrees of freedom
/// are reported.
pub fn acd_statistic(pairs: &[ScoreHessian], quantile: f64, rank_tolerance: f64) -> Result<AcdResult> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 draws, got {n}")));
    }
    let d = pairs[0].g.len();
    let r = r_nominal(d);
    if n < r {
        log::warn!("{n} draws for {r} statistic components; the covariance is rank deficient");
    }
    let mut rows = Vec::with_capacity(n * r);
    for pair in pairs {
        if pair.g.len() != d || pair.h.len() != d * d {
            return Err(Error::DimensionMismatch(String::from("score/Hessian sizes differ across draws")));
        }
        let mut b = pair.h.clone();
        for i in 0..d {
            for j in 0..d {
                b[i * d + j] += pair.g[i] * pair.g[j];
            }
        }
        rows.extend(vech(d, &b));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(String::from("non-finite score or Hessian")));
    }
    let (mean, cov) = mean_and_cov(&rows, r);
    if cov.iter().all(|&c| c == 0.0) {
        if mean.iter().all(|&m| m == 0.0) {
            let threshold = chi_square_quantile(quantile, r)?;
            return Ok(AcdResult {
                statistic: 0.0,
                dof: r,
                threshold,
                quantile,
                pass: true,
                n_draws: n,
                r_nominal: r,
            });
        }
        return Err(Error::ZeroCovariance);
    }
    let (pinv, rank) = linalg::symmetric_pinv(r, &cov, rank_tolerance);
    let mut quad = 0.0;
    for a in 0..r {
        let row: f64 = (0..r).map(|b| pinv[a * r + b] * mean[b]).sum();
        quad += mean[a] * row;
    }
    let statistic = (n as f64 * quad).max(0.0);
    let threshold = chi_square_quantile(quantile, rank)?;
    Ok(AcdResult {
        statistic,
        dof: rank,
        threshold,
        quantile,
        pass: statistic < threshold,
        n_draws: n,
        r_nominal: r,
    })
}

/// Positions in the chain kept after thinning: every `thin`-th draw,
/// counting from the last.
pub fn thinned_indices(n_draws: usize, thin: usize) -> Vec<usize> {
    let thin = thin.max(1);
    (0..n_draws).rev().step_by(thin).collect::<Vec<_>>().into_iter().rev().collect()
}

/// Score and Hessian for draw `t` of a chain on its own RNG substream, so
/// draws can be processed in any order or in parallel.
pub fn draw_score_and_hessian(
    spec: &ModelSpec,
    y: &Arrangement,
    prior: &PriorSpec,
    config: &AcdConfig,
    chain: &ChainOutput,
    seed: u64,
    t: usize,
) -> Result<ScoreHessian> {
    let theta = Params::from_flat(spec.p(), spec.k(), chain.draw(t).to_vec())?;
    let mut rng = substream(seed, domain::ACD_DRAW, (chain.chain << 32) | t as u64);
    score_and_hessian(spec, &theta, y, prior, config, &mut rng)
}

/// Run the diagnostic over a chain.
pub fn diagnose(
    chain: &ChainOutput,
    spec: &ModelSpec,
    y: &Arrangement,
    prior: &PriorSpec,
    config: &AcdConfig,
    seed: u64,
) -> Result<AcdResult> {
    config.validate()?;
    if chain.n_draws() == 0 {
        return Err(Error::InvalidArgument(String::from("chain has no draws")));
    }
    if chain.p_total() != spec.p_total() {
        return Err(Error::DimensionMismatch(format!(
            "chain has {} parameters, model has {}",
            chain.p_total(),
            spec.p_total()
        )));
    }
    let pairs = thinned_indices(chain.n_draws(), config.thin)
        .into_iter()
        .map(|t| draw_score_and_hessian(spec, y, prior, config, chain, seed, t))
        .collect::<Result<Vec<_>>>()?;
    acd_statistic(&pairs, config.quantile, config.rank_tolerance)
}
