//! Independent per-parameter priors with optional support bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum PriorTerm {
    Normal { mean: f64, sd: f64 },
    Flat,
}

/// Prior `p(θ) = Πⱼ pⱼ(θⱼ) · 1{θ ∈ support}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorSpec {
    pub terms: Vec<PriorTerm>,
    /// Closed `[lower, upper]` support per parameter; `None` is unbounded.
    pub bounds: Vec<Option<(f64, f64)>>,
}

impl PriorSpec {
    /// Normal(0, sd) on every parameter, unbounded.
    pub fn normal(p_total: usize, sd: f64) -> Self {
        Self {
            terms: vec![PriorTerm::Normal { mean: 0.0, sd }; p_total],
            bounds: vec![None; p_total],
        }
    }

    /// Default prior: Normal(0, 10) on every coefficient and on γ.
    pub fn default_for(p_total: usize) -> Self {
        Self::normal(p_total, 10.0)
    }

    pub fn flat(p_total: usize) -> Self {
        Self {
            terms: vec![PriorTerm::Flat; p_total],
            bounds: vec![None; p_total],
        }
    }

    pub fn with_bounds(mut self, index: usize, lower: f64, upper: f64) -> Self {
        self.bounds[index] = Some((lower, upper));
        self
    }

    pub fn validate(&self, p_total: usize) -> Result<()> {
        if self.terms.len() != p_total || self.bounds.len() != p_total {
            return Err(Error::DimensionMismatch(format!(
                "prior covers {} parameters, model has {p_total}",
                self.terms.len()
            )));
        }
        for (j, t) in self.terms.iter().enumerate() {
            if let PriorTerm::Normal { mean, sd } = t {
                if !(*sd > 0.0 && sd.is_finite() && mean.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "prior term {j}: normal sd must be positive and finite"
                    )));
                }
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let Some((lo, hi)) = b {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument(format!("prior bounds {j}: lower ≥ upper")));
                }
            }
        }
        Ok(())
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(theta)
            .all(|(b, &v)| b.is_none_or(|(lo, hi)| v >= lo && v <= hi))
    }

    /// Log density up to a constant; `-∞` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if !self.in_support(theta) {
            return f64::NEG_INFINITY;
        }
        self.terms
            .iter()
            .zip(theta)
            .map(|(t, &v)| match *t {
                PriorTerm::Normal { mean, sd } => {
                    let z = (v - mean) / sd;
                    -0.5 * z * z - math::ln(sd)
                }
                PriorTerm::Flat => 0.0,
            })
            .sum()
    }

    /// Gradient of the log density (bounds ignored).
    pub fn grad_log_density(&self, theta: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .zip(theta)
            .map(|(t, &v)| match *t {
                PriorTerm::Normal { mean, sd } => -(v - mean) / (sd * sd),
                PriorTerm::Flat => 0.0,
            })
            .collect()
    }

    /// Diagonal of the Hessian of the log density (off-diagonals are zero).
    pub fn hessian_diag_log_density(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| match *t {
                PriorTerm::Normal { sd, .. } => -1.0 / (sd * sd),
                PriorTerm::Flat => 0.0,
            })
            .collect()
    }
}
