//! Maximum pseudolikelihood estimation.
//!
//! Each site contributes a multinomial-logistic likelihood in `θ`: the logit of
//! class `c` at site `i` is `θ · φᵢ_c`, where `φᵢ_c` carries `xᵢ` in the block
//! of class `c` (nothing for the reference class) and the neighbor count
//! `nᵢ_c` in the `γ` slot. The negative log pseudolikelihood is therefore
//! smooth and convex, and Newton's method with backtracking is used.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::math;
use crate::model::{Arrangement, ModelSpec, Params};
use crate::{Error, Result};

/// Value, gradient and Hessian (row-major) of `−log PL(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLikelihood {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

pub fn neg_log_pseudolikelihood(
    spec: &ModelSpec,
    theta: &Params,
    y: &Arrangement,
) -> Result<PseudoLikelihood> {
    spec.check_params(theta)?;
    spec.check_arrangement(y)?;
    let (k, p, d) = (spec.k(), spec.p(), spec.p_total());
    let g_idx = d - 1;
    let gamma = theta.gamma();
    let eta = spec.linear_predictors(theta);
    let mut value = 0.0;
    let mut gradient = vec![0.0; d];
    let mut hessian = vec![0.0; d * d];
    let mut logits = vec![0.0; k];
    let mut probs = vec![0.0; k];
    let mut mean_phi = vec![0.0; d];
    let labels = y.labels();

    for i in 0..spec.n_sites() {
        let counts = spec.graph().neighbor_class_counts(labels, i, k)?;
        for c in 0..k {
            logits[c] = eta[i * k + c] + gamma * counts[c] as f64;
        }
        let lse = math::log_sum_exp(&logits);
        let yi = labels[i] as usize;
        let term = lse - logits[yi];
        if !term.is_finite() {
            return Err(Error::NonFinite { site: i });
        }
        value += term;
        for c in 0..k {
            probs[c] = math::exp(logits[c] - lse);
        }

        // E_p[φ] over classes
        let x = spec.design().row(i);
        mean_phi.fill(0.0);
        for c in 1..k {
            for j in 0..p {
                mean_phi[(c - 1) * p + j] = probs[c] * x[j];
            }
        }
        mean_phi[g_idx] = (0..k).map(|c| probs[c] * counts[c] as f64).sum();

        // gradient: E_p[φ] − φ_{yᵢ}
        for (g, m) in gradient.iter_mut().zip(&mean_phi) {
            *g += m;
        }
        if yi > 0 {
            for j in 0..p {
                gradient[(yi - 1) * p + j] -= x[j];
            }
        }
        gradient[g_idx] -= counts[yi] as f64;

        // hessian: E_p[φ φᵗ] − E_p[φ] E_p[φ]ᵗ
        for c in 0..k {
            let w = probs[c];
            let nc = counts[c] as f64;
            if c > 0 {
                let base = (c - 1) * p;
                for a in 0..p {
                    for b in 0..p {
                        hessian[(base + a) * d + base + b] += w * x[a] * x[b];
                    }
                    hessian[(base + a) * d + g_idx] += w * x[a] * nc;
                    hessian[g_idx * d + base + a] += w * x[a] * nc;
                }
            }
            hessian[g_idx * d + g_idx] += w * nc * nc;
        }
        for a in 0..d {
            for b in 0..d {
                hessian[a * d + b] -= mean_phi[a] * mean_phi[b];
            }
        }
    }
    for a in 0..d {
        for b in a + 1..d {
            hessian[b * d + a] = hessian[a * d + b];
        }
    }
    Ok(PseudoLikelihood {
        value,
        gradient,
        hessian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MpleOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Hold `γ` at this value and fit only the coefficients.
    pub fix_gamma: Option<f64>,
    /// `|θ|` beyond which a non-vanishing gradient is reported as divergence.
    pub divergence_bound: f64,
}

impl Default for MpleOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-8,
            fix_gamma: None,
            divergence_bound: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpleResult {
    pub theta_hat: Params,
    pub neg_log_pl: f64,
    pub gradient_norm: f64,
    /// `p_total × p_total` Hessian of `−log PL` at `theta_hat`.
    pub hessian: Vec<f64>,
    /// Inverse Hessian; `None` when the Hessian is singular.
    pub covariance: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    /// A Newton system was singular at some iterate and a gradient step was
    /// taken instead.
    pub used_gradient_step: bool,
}

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const SEPARATION_TOL: f64 = 1e-8;
const FLAT_CURVATURE: f64 = 1e-8;
const ROUNDING: f64 = 1e-13;

pub fn mple_fit(spec: &ModelSpec, y: &Arrangement, opts: &MpleOptions) -> Result<MpleResult> {
    spec.check_arrangement(y)?;
    let d = spec.p_total();
    let g_idx = d - 1;
    let free: Vec<usize> = (0..d).filter(|&j| opts.fix_gamma.is_none() || j != g_idx).collect();
    let m = free.len();

    let mut theta = Params::zeros(spec.p(), spec.k());
    if let Some(g) = opts.fix_gamma {
        theta.as_mut_slice()[g_idx] = g;
    }
    let mut current = neg_log_pseudolikelihood(spec, &theta, y)?;
    let free_hessian = |h: &[f64]| -> Vec<f64> {
        free.iter()
            .flat_map(|&a| free.iter().map(move |&b| h[a * d + b]))
            .collect()
    };
    let initially_regular = !flat_direction(m, &free_hessian(&current.hessian));
    let mut iterations = 0;
    let mut used_gradient_step = false;
    let mut converged = false;

    loop {
        let g_free: Vec<f64> = free.iter().map(|&j| current.gradient[j]).collect();
        let grad_norm = math::norm(&g_free);
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        let theta_norm = math::norm(theta.as_slice());
        if theta_norm > opts.divergence_bound {
            return Err(Error::DivergenceDetected {
                norm: theta_norm,
                grad_norm,
            });
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let h_free = free_hessian(&current.hessian);
        let neg_g: Vec<f64> = g_free.iter().map(|v| -v).collect();
        let direction = match linalg::spd_solve(m, &h_free, &neg_g) {
            Some(step) if step.iter().all(|v| v.is_finite()) => step,
            _ => {
                used_gradient_step = true;
                neg_g.clone()
            }
        };
        let slope = -math::dot(&g_free, &direction);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = theta.clone();
            for (&j, dj) in free.iter().zip(&direction) {
                trial.as_mut_slice()[j] += t * dj;
            }
            let eval = neg_log_pseudolikelihood(spec, &trial, y)?;
            // below rounding level the Armijo test compares noise
            let noise = ROUNDING * (1.0 + libm::fabs(current.value));
            let tiny = slope.abs() <= noise;
            if eval.value <= current.value + ARMIJO_C * t * slope || (tiny && eval.value <= current.value + noise) {
                accepted = Some((trial, eval));
                break;
            }
            t *= SHRINK;
        }
        match accepted {
            Some((trial, eval)) => {
                theta = trial;
                current = eval;
            }
            // no decrease representable along the direction: stalled at the optimum
            // to within floating point resolution
            None => break,
        }
    }

    let g_free: Vec<f64> = free.iter().map(|&j| current.gradient[j]).collect();
    let gradient_norm = math::norm(&g_free);
    // Every conditional fitted with probability ≈ 1 means the data are
    // separated and the supremum lies at infinity; the gradient only looks
    // small because the objective is flat in the tail.
    // Quasi-separation leaves the value bounded but sends θ off along a
    // direction in which the curvature vanishes; a Hessian that was regular at
    // the start and is numerically singular at the end signals that.
    let separated = current.value <= SEPARATION_TOL * spec.n_sites() as f64
        || (initially_regular && flat_direction(m, &free_hessian(&current.hessian)));
    let theta_norm = math::norm(theta.as_slice());
    if separated || theta_norm > opts.divergence_bound {
        return Err(Error::DivergenceDetected {
            norm: theta_norm,
            grad_norm: gradient_norm,
        });
    }
    let covariance = linalg::spd_inverse(d, &current.hessian).ok();
    Ok(MpleResult {
        theta_hat: theta,
        neg_log_pl: current.value,
        gradient_norm,
        hessian: current.hessian,
        covariance,
        converged,
        iterations,
        used_gradient_step,
    })
}

fn flat_direction(n: usize, h: &[f64]) -> bool {
    let eig = linalg::symmetric_eigenvalues(n, h);
    let max = eig.iter().copied().fold(0.0f64, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    min <= FLAT_CURVATURE * max
}
