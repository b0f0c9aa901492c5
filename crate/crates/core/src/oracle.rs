//! Brute-force enumeration over all `Kⁿ` arrangements of a tiny lattice.
//!
//! These routines are the ground truth that the stochastic samplers and the
//! curvature diagnostic are validated against. They refuse to run beyond
//! [`ENUMERATION_LIMIT`] configurations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{Arrangement, ModelSpec, Params};
use crate::prior::PriorSpec;
use crate::{Error, Result};

pub const ENUMERATION_LIMIT: usize = 2_000_000;

/// Sufficient statistics of every arrangement, in mixed-radix order with site 0
/// as the fastest-varying digit.
#[derive(Debug, Clone)]
pub struct ExactModel<'a> {
    spec: &'a ModelSpec,
    n_configs: usize,
    stats: Vec<f64>,
}

/// Log probability of every arrangement under one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub log_probs: Vec<f64>,
    pub log_z: f64,
}

/// Mean and covariance (row-major) of `s(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

pub fn configuration_count(spec: &ModelSpec) -> Result<usize> {
    let total = libm::pow(spec.k() as f64, spec.n_sites() as f64);
    if total > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationTooLarge {
            configurations: total,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(total as usize)
}

impl<'a> ExactModel<'a> {
    pub fn new(spec: &'a ModelSpec) -> Result<Self> {
        let n_configs = configuration_count(spec)?;
        let d = spec.p_total();
        let mut stats = Vec::with_capacity(n_configs * d);
        let mut labels = vec![0u32; spec.n_sites()];
        for idx in 0..n_configs {
            if idx > 0 {
                increment(&mut labels, spec.k() as u32);
            }
            stats.extend_from_slice(spec.suff_stats_unchecked(&labels).as_slice());
        }
        Ok(Self {
            spec,
            n_configs,
            stats,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn n_configs(&self) -> usize {
        self.n_configs
    }

    /// Arrangement number `index` in enumeration order.
    pub fn arrangement(&self, mut index: usize) -> Arrangement {
        let k = self.spec.k();
        let labels = (0..self.spec.n_sites())
            .map(|_| {
                let l = (index % k) as u32;
                index /= k;
                l
            })
            .collect();
        Arrangement::from_zero_based(labels)
    }

    /// Enumeration index of `y`.
    pub fn index_of(&self, y: &Arrangement) -> usize {
        let k = self.spec.k();
        y.labels()
            .iter()
            .rev()
            .fold(0usize, |acc, &l| acc * k + l as usize)
    }

    pub fn stats(&self, index: usize) -> &[f64] {
        let d = self.spec.p_total();
        &self.stats[index * d..(index + 1) * d]
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n_configs)
            .map(|i| math::dot(theta, self.stats(i)))
            .collect()
    }

    pub fn log_z(&self, theta: &Params) -> f64 {
        math::log_sum_exp(&self.log_weights(theta.as_slice()))
    }

    pub fn distribution(&self, theta: &Params) -> ExactDistribution {
        let mut log_probs = self.log_weights(theta.as_slice());
        let log_z = math::log_sum_exp(&log_probs);
        for lp in &mut log_probs {
            *lp -= log_z;
        }
        ExactDistribution { log_probs, log_z }
    }

    pub fn moments(&self, theta: &Params) -> Moments {
        let d = self.spec.p_total();
        let dist = self.distribution(theta);
        let probs: Vec<f64> = dist.log_probs.iter().map(|&lp| math::exp(lp)).collect();
        let mut mean = vec![0.0; d];
        for (i, &w) in probs.iter().enumerate() {
            for (m, s) in mean.iter_mut().zip(self.stats(i)) {
                *m += w * s;
            }
        }
        let mut cov = vec![0.0; d * d];
        for (i, &w) in probs.iter().enumerate() {
            let s = self.stats(i);
            for a in 0..d {
                let da = s[a] - mean[a];
                for b in 0..=a {
                    cov[a * d + b] += w * da * (s[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                cov[b * d + a] = cov[a * d + b];
            }
        }
        Moments { mean, cov }
    }
}

fn increment(labels: &mut [u32], k: u32) {
    for l in labels.iter_mut() {
        *l += 1;
        if *l < k {
            return;
        }
        *l = 0;
    }
}

pub fn enumerate_log_z(spec: &ModelSpec, theta: &Params) -> Result<f64> {
    spec.check_params(theta)?;
    Ok(ExactModel::new(spec)?.log_z(theta))
}

pub fn exact_distribution(spec: &ModelSpec, theta: &Params) -> Result<ExactDistribution> {
    spec.check_params(theta)?;
    Ok(ExactModel::new(spec)?.distribution(theta))
}

pub fn exact_moments(spec: &ModelSpec, theta: &Params) -> Result<Moments> {
    spec.check_params(theta)?;
    Ok(ExactModel::new(spec)?.moments(theta))
}

/// One free coordinate of `θ` evaluated at the listed values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub index: usize,
    pub values: Vec<f64>,
}

impl GridAxis {
    /// `count` equally spaced points covering `[lower, upper]`.
    pub fn linspace(index: usize, lower: f64, upper: f64, count: usize) -> Self {
        let values = if count == 1 {
            vec![lower]
        } else {
            (0..count)
                .map(|i| lower + (upper - lower) * i as f64 / (count - 1) as f64)
                .collect()
        };
        Self { index, values }
    }
}

/// Posterior probabilities on a tensor grid (first axis varies slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub axes: Vec<GridAxis>,
    pub log_posterior: Vec<f64>,
    pub probs: Vec<f64>,
}

impl PosteriorGrid {
    fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut coords = vec![0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            coords[a] = flat % axis.values.len();
            flat /= axis.values.len();
        }
        coords
    }

    /// Marginal probabilities along axis position `a`.
    pub fn marginal(&self, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes[a].values.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            out[self.coords(flat)[a]] += p;
        }
        out
    }

    /// Posterior mean of the parameter on axis position `a`.
    pub fn mean(&self, a: usize) -> f64 {
        self.marginal(a)
            .iter()
            .zip(&self.axes[a].values)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Parameter values at the grid point of highest posterior mass.
    pub fn mode(&self) -> Vec<f64> {
        let best = self
            .probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
            .0;
        self.coords(best)
            .iter()
            .zip(&self.axes)
            .map(|(&c, axis)| axis.values[c])
            .collect()
    }
}

/// Exact posterior `p(θ) h(y|θ) / Z(θ)` normalized over a grid of at most two
/// free coordinates; all other coordinates stay at `base`.
pub fn exact_posterior_grid(
    spec: &ModelSpec,
    y: &Arrangement,
    prior: &PriorSpec,
    base: &Params,
    axes: &[GridAxis],
) -> Result<PosteriorGrid> {
    spec.check_params(base)?;
    prior.validate(spec.p_total())?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidArgument(format!(
            "posterior grid needs one or two axes, got {}",
            axes.len()
        )));
    }
    for axis in axes {
        if axis.index >= spec.p_total() || axis.values.is_empty() {
            return Err(Error::InvalidArgument(format!("bad grid axis {}", axis.index)));
        }
        if axis.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite grid axis {}", axis.index)));
        }
    }
    let exact = ExactModel::new(spec)?;
    let s_y = spec.suff_stats(y)?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut theta = base.clone();
    let mut log_posterior = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        for axis in axes.iter().rev() {
            theta.as_mut_slice()[axis.index] = axis.values[rem % axis.values.len()];
            rem /= axis.values.len();
        }
        let lp = prior.log_density(theta.as_slice());
        log_posterior.push(if lp == f64::NEG_INFINITY {
            lp
        } else {
            lp + math::dot(theta.as_slice(), s_y.as_slice()) - exact.log_z(&theta)
        });
    }
    let norm = math::log_sum_exp(&log_posterior);
    if !norm.is_finite() {
        return Err(Error::InvalidArgument(String::from("posterior has no mass on the grid")));
    }
    let probs = log_posterior.iter().map(|&l| math::exp(l - norm)).collect();
    Ok(PosteriorGrid {
        axes: axes.to_vec(),
        log_posterior,
        probs,
    })
}
