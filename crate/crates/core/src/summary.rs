//! Posterior summaries and Monte Carlo standard errors.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Per-parameter posterior mean and equal-tailed 95% interval.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorSummary {
    pub n_draws: usize,
    pub params: Vec<ParamSummary>,
}

/// Empirical quantile with linear interpolation between order statistics:
/// position `h = (N − 1)·q` in the sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarize `draws` (row-major `T × d`, one row per retained draw).
pub fn summarize(draws: &[f64], names: &[String]) -> Result<PosteriorSummary> {
    let d = names.len();
    if d == 0 || draws.is_empty() {
        return Err(Error::InvalidArgument(String::from("cannot summarize an empty chain")));
    }
    if draws.len() % d != 0 {
        return Err(Error::DimensionMismatch(String::from(
            "draw matrix width does not match parameter names",
        )));
    }
    let t = draws.len() / d;
    if t < 40 {
        log::warn!("summarizing only {t} draws; interval endpoints are unstable");
    }
    let params = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut col: Vec<f64> = (0..t).map(|r| draws[r * d + j]).collect();
            let mean = col.iter().sum::<f64>() / t as f64;
            col.sort_by(f64::total_cmp);
            ParamSummary {
                name: name.clone(),
                mean,
                lower: quantile_sorted(&col, 0.025),
                upper: quantile_sorted(&col, 0.975),
            }
        })
        .collect();
    Ok(PosteriorSummary { n_draws: t, params })
}

/// Sample mean and its batch-means standard error using `batches` equal
/// batches (trailing remainder dropped from the error estimate).
pub fn mean_and_batch_se(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = batches.max(2);
    let size = n / b;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let batch_means: Vec<f64> = values
        .chunks_exact(size)
        .take(b)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (b - 1) as f64;
    (mean, math::sqrt(var / b as f64))
}
