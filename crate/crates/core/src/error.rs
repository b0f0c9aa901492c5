use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("class label {label} at site {site} is outside 1..={k}")]
    LabelOutOfRange { site: usize, label: u32, k: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lattice too large for enumeration: {configurations} configurations exceed the limit of {limit}")]
    EnumerationTooLarge { configurations: f64, limit: usize },
    #[error("non-finite pseudolikelihood term at site {site}")]
    NonFinite { site: usize },
    #[error("pseudolikelihood diverged: |θ| = {norm:.3} with gradient norm {grad_norm:.3e} (monotone likelihood)")]
    DivergenceDetected { norm: f64, grad_norm: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("covariance of the curvature terms is identically zero while their mean is not")]
    ZeroCovariance,
    #[error("grid cells without any observation: {0:?}")]
    EmptyCells(Vec<(usize, usize)>),
    #[error("unmapped class label {label:?} first seen at record {record}")]
    UnmappedClass { label: String, record: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
