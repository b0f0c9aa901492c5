//! Inference for the automultinomial Markov random field on lattices.
//!
//! The automultinomial model assigns each site of a neighborhood graph one of
//! `K` classes. Its joint mass function is an exponential family
//!
//! ```text
//! P(y) ∝ exp{ Σᵢ Σ_{k≥2} xᵢᵗβ_k I(yᵢ = k) + γ S(y) }
//! ```
//!
//! where `S(y)` counts agreeing neighbor pairs. The normalizer is intractable
//! beyond tiny lattices, so this crate provides:
//!
//! * [`gibbs`]: single-site Gibbs sweeps (raster or color-class order),
//! * [`mple`]: Newton maximization of the pseudolikelihood,
//! * [`dmh`]: the Double Metropolis–Hastings posterior sampler with block
//!   proposals and pilot tuning,
//! * [`acd`]: the approximate curvature diagnostic, a χ² test of the second
//!   Bartlett identity computed from auxiliary Gibbs draws,
//! * [`oracle`]: brute-force enumeration used as ground truth on tiny lattices,
//! * [`simgen`] and [`dataprep`]: synthetic data generators and point-to-grid
//!   aggregation.
//!
//! The crate is `no_std` (it needs `alloc`). All floating point math goes
//! through `libm` so results are bit-identical across platforms. The `std`
//! feature only forwards to dependencies; file formats and the command line
//! live in the `automn` crate.
//!
//! Parameters are flattened class-major: `θ = (β_{2,1..p}, β_{3,1..p}, …, γ)`.
//! Class labels are 0-based internally and 1-based at every I/O boundary.
#![no_std]

extern crate alloc;

pub mod acd;
pub mod chisq;
pub mod dataprep;
pub mod dmh;
mod error;
pub mod gibbs;
pub mod lattice;
pub mod linalg;
pub mod math;
pub mod model;
pub mod mple;
pub mod oracle;
pub mod prior;
pub mod rng;
pub mod simgen;
pub mod summary;

pub use error::{Error, Result};
pub use lattice::{build_regular_grid, Connectivity, GridSpec, NeighborhoodGraph};
pub use model::{Arrangement, DesignMatrix, ModelSpec, Params, SuffStats};
pub use prior::PriorSpec;
