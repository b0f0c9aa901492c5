//! Synthetic data generators: normal covariates, CAR random effects feeding a
//! multinomial logit, and argmax-of-Gaussian-process categorical fields.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::lattice::{GridSpec, NeighborhoodGraph};
use crate::linalg;
use crate::math;
use crate::model::{softmax, Arrangement, DesignMatrix};
use crate::rng::{std_normal, uniform};
use crate::{Error, Result};

/// Mean and standard deviation of one simulated covariate column.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnSpec {
    pub mean: f64,
    pub sd: f64,
}

/// `n` rows of independent normal columns, optionally preceded by an
/// intercept column. Columns are filled one after another.
pub fn simulate_covariates<R: Rng + ?Sized>(
    n: usize,
    columns: &[ColumnSpec],
    intercept: bool,
    rng: &mut R,
) -> Result<DesignMatrix> {
    for (j, c) in columns.iter().enumerate() {
        if !(c.sd > 0.0 && c.sd.is_finite() && c.mean.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "covariate {j}: sd must be positive and finite, got {}",
                c.sd
            )));
        }
    }
    let p = columns.len() + usize::from(intercept);
    let mut values = vec![0.0; n * p];
    let offset = usize::from(intercept);
    if intercept {
        for i in 0..n {
            values[i * p] = 1.0;
        }
    }
    for (j, c) in columns.iter().enumerate() {
        for i in 0..n {
            values[i * p + offset + j] = c.mean + c.sd * std_normal(rng);
        }
    }
    let mut names: Vec<String> = Vec::with_capacity(p);
    if intercept {
        names.push(String::from("intercept"));
    }
    names.extend((1..=columns.len()).map(|j| format!("x{j}")));
    DesignMatrix::new(n, p, values, names)
}

/// Proper CAR prior with precision `τ(D − ρA)`.
#[derive(Debug, Clone)]
pub struct CarSpec {
    pub tau: f64,
    pub rho: f64,
    pub graph: NeighborhoodGraph,
}

impl CarSpec {
    /// Dense row-major precision matrix.
    pub fn precision(&self) -> Vec<f64> {
        let n = self.graph.n_sites();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = self.tau * self.graph.degree(i) as f64;
            for &j in self.graph.adjacency(i) {
                q[i * n + j] -= self.tau * self.rho;
            }
        }
        q
    }

    /// Cholesky factor of the precision; fails when it is not positive definite.
    pub fn factor(&self) -> Result<Vec<f64>> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("CAR tau must be positive, got {}", self.tau)));
        }
        let n = self.graph.n_sites();
        linalg::cholesky(n, &self.precision()).map_err(|_| {
            Error::NotPositiveDefinite(format!(
                "CAR precision with rho = {} is not positive definite on this graph",
                self.rho
            ))
        })
    }
}

/// One zero-mean draw with covariance `Q⁻¹`, given the Cholesky factor of `Q`.
pub fn car_field_from_factor<R: Rng + ?Sized>(factor: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let xi: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
    linalg::lower_transpose_solve(n, factor, &xi)
}

pub fn car_field<R: Rng + ?Sized>(spec: &CarSpec, rng: &mut R) -> Result<Vec<f64>> {
    let factor = spec.factor()?;
    Ok(car_field_from_factor(&factor, spec.graph.n_sites(), rng))
}

/// Per-site class probabilities `π_i·` of the multinomial logit with class 1
/// as reference. `beta[c]` and `phi[c]` belong to class `c + 2`.
pub fn multinomial_logit_probs(x: &DesignMatrix, beta: &[Vec<f64>], phi: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if beta.len() != phi.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient vectors but {} random-effect fields",
            beta.len(),
            phi.len()
        )));
    }
    for (b, f) in beta.iter().zip(phi) {
        if b.len() != x.p() || f.len() != x.n() {
            return Err(Error::DimensionMismatch(String::from(
                "coefficient or random-effect length does not match the design",
            )));
        }
    }
    let k = beta.len() + 1;
    let mut logits = vec![0.0; k];
    Ok((0..x.n())
        .map(|i| {
            for c in 1..k {
                logits[c] = math::dot(x.row(i), &beta[c - 1]) + phi[c - 1][i];
            }
            softmax(&logits)
        })
        .collect())
}

/// Independent categorical draw per site from the multinomial logit.
pub fn multinomial_logit_sample<R: Rng + ?Sized>(
    x: &DesignMatrix,
    beta: &[Vec<f64>],
    phi: &[Vec<f64>],
    rng: &mut R,
) -> Result<Arrangement> {
    let probs = multinomial_logit_probs(x, beta, phi)?;
    let labels = probs.iter().map(|p| categorical(p, uniform(rng))).collect();
    Ok(Arrangement::from_zero_based(labels))
}

fn categorical(p: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    for (c, &pc) in p.iter().enumerate() {
        acc += pc;
        if u < acc {
            return c as u32;
        }
    }
    (p.len() - 1) as u32
}

/// Latent Gaussian processes with a shared γ-exponential kernel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GpSpec {
    pub length: f64,
    pub exponent: f64,
    /// One mean-coefficient vector per class, length `p` each.
    pub beta: Vec<Vec<f64>>,
}

/// `exp(−(d / l)^ν)`.
pub fn gp_kernel(d: f64, length: f64, exponent: f64) -> f64 {
    math::exp(-libm::pow(d / length, exponent))
}

/// Kernel matrix over cell centroids at unit spacing.
pub fn gp_kernel_matrix(grid: &GridSpec, length: f64, exponent: f64) -> Vec<f64> {
    let n = grid.n_sites();
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        let (ra, ca) = grid.row_col(a);
        for b in 0..=a {
            let (rb, cb) = grid.row_col(b);
            let dr = ra as f64 - rb as f64;
            let dc = ca as f64 - cb as f64;
            let v = gp_kernel(math::sqrt(dr * dr + dc * dc), length, exponent);
            k[a * n + b] = v;
            k[b * n + a] = v;
        }
    }
    k
}

/// Cholesky with diagonal jitter grown tenfold from `1e-12·trace/n` up to
/// `1e-6·trace/n`.
pub fn jittered_cholesky(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    if let Ok(l) = linalg::cholesky(n, a) {
        return Ok(l);
    }
    let mean_diag = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64;
    let mut jitter = 1e-12 * mean_diag;
    let max = 1e-6 * mean_diag;
    let mut work = a.to_vec();
    while jitter <= max * (1.0 + 1e-9) {
        for i in 0..n {
            work[i * n + i] = a[i * n + i] + jitter;
        }
        if let Ok(l) = linalg::cholesky(n, &work) {
            log::debug!("kernel factorized with jitter {jitter:e}");
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite(format!(
        "kernel matrix not factorizable with jitter up to {max:e}"
    )))
}

/// Label each cell with the class whose latent field `Z_k ~ N(Xβ_k, Σ)` is
/// largest there; ties go to the lowest class.
pub fn gp_mixture_sample<R: Rng + ?Sized>(
    grid: &GridSpec,
    x: &DesignMatrix,
    spec: &GpSpec,
    rng: &mut R,
) -> Result<Arrangement> {
    let n = grid.n_sites();
    if x.n() != n {
        return Err(Error::DimensionMismatch(format!("design has {} rows for {n} cells", x.n())));
    }
    if spec.beta.is_empty() || spec.beta.iter().any(|b| b.len() != x.p()) {
        return Err(Error::DimensionMismatch(String::from(
            "need one coefficient vector of design width per class",
        )));
    }
    if !(spec.length > 0.0 && spec.exponent > 0.0 && spec.exponent <= 2.0) {
        return Err(Error::InvalidArgument(String::from(
            "kernel needs length > 0 and exponent in (0, 2]",
        )));
    }
    let k = spec.beta.len();
    if k == 1 {
        return Ok(Arrangement::constant(n, 0));
    }
    let factor = jittered_cholesky(n, &gp_kernel_matrix(grid, spec.length, spec.exponent))?;
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut labels = vec![0u32; n];
    for (c, beta) in spec.beta.iter().enumerate() {
        let xi: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
        let noise = linalg::lower_mul(n, &factor, &xi);
        for i in 0..n {
            let z = math::dot(x.row(i), beta) + noise[i];
            if z > best[i] {
                best[i] = z;
                labels[i] = c as u32;
            }
        }
    }
    Ok(Arrangement::from_zero_based(labels))
}
