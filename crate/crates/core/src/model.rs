//! The automultinomial model: arrangements, design, parameters and the
//! exponential-family statistic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::lattice::NeighborhoodGraph;
use crate::math;
use crate::{Error, Result};

/// Class labels of every site, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrangement {
    labels: Vec<u32>,
}

impl Arrangement {
    /// Wrap 0-based labels. Range is checked against a model with
    /// [`ModelSpec::check_arrangement`].
    pub fn from_zero_based(labels: Vec<u32>) -> Self {
        Self { labels }
    }

    /// Parse 1-based labels as they appear in files.
    pub fn from_one_based(labels: &[u32], k: usize) -> Result<Self> {
        let labels = labels
            .iter()
            .enumerate()
            .map(|(site, &l)| {
                if l == 0 || l as usize > k {
                    Err(Error::LabelOutOfRange { site, label: l, k })
                } else {
                    Ok(l - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { labels })
    }

    pub fn constant(n: usize, class: u32) -> Self {
        Self {
            labels: vec![class; n],
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    pub fn to_one_based(&self) -> Vec<u32> {
        self.labels.iter().map(|l| l + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of sites in each class.
    pub fn class_counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// `n × p` covariate matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "design has {} values, expected {n}×{p}",
                values.len()
            )));
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {p} columns",
                column_names.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite design entry at row {}, column {}",
                idx / p,
                idx % p
            )));
        }
        Ok(Self {
            n,
            p,
            values,
            column_names,
        })
    }

    /// Single all-ones column named `intercept`: the Potts model design.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            n,
            p: 1,
            values: vec![1.0; n],
            column_names: vec![String::from("intercept")],
        }
    }

    /// Same matrix with an all-ones `intercept` column prepended.
    pub fn with_intercept(&self) -> Self {
        let mut values = Vec::with_capacity(self.n * (self.p + 1));
        for i in 0..self.n {
            values.push(1.0);
            values.extend_from_slice(self.row(i));
        }
        let mut column_names = vec![String::from("intercept")];
        column_names.extend(self.column_names.iter().cloned());
        Self {
            n: self.n,
            p: self.p + 1,
            values,
            column_names,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }
}

/// Model parameters `θ = (β, γ)` flattened class-major with `γ` last.
///
/// `β₁ ≡ 0` for the reference class is implicit and not stored; entry
/// `(c − 1)·p + j` holds the coefficient of predictor `j` for 0-based class
/// `c ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    p: usize,
    k: usize,
    theta: Vec<f64>,
}

impl Params {
    pub fn zeros(p: usize, k: usize) -> Self {
        Self {
            p,
            k,
            theta: vec![0.0; p * (k - 1) + 1],
        }
    }

    pub fn from_flat(p: usize, k: usize, theta: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
        }
        if theta.len() != p * (k - 1) + 1 {
            return Err(Error::DimensionMismatch(format!(
                "θ has length {}, expected p(K−1)+1 = {}",
                theta.len(),
                p * (k - 1) + 1
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(String::from("θ has non-finite entries")));
        }
        Ok(Self { p, k, theta })
    }

    /// Build from per-class coefficient vectors for classes `2..=K` and `γ`.
    pub fn from_beta_columns(columns: &[Vec<f64>], gamma: f64) -> Result<Self> {
        let p = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != p) {
            return Err(Error::DimensionMismatch(String::from("ragged β columns")));
        }
        let mut theta: Vec<f64> = columns.iter().flatten().copied().collect();
        theta.push(gamma);
        Self::from_flat(p, columns.len() + 1, theta)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p_total(&self) -> usize {
        self.theta.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.theta
    }

    /// Coefficient of predictor `j` for 0-based class `c` (zero for `c = 0`).
    #[inline]
    pub fn beta(&self, c: usize, j: usize) -> f64 {
        if c == 0 {
            0.0
        } else {
            self.theta[(c - 1) * self.p + j]
        }
    }

    /// Coefficients `β_c` for 0-based class `c ≥ 1`.
    pub fn beta_column(&self, c: usize) -> &[f64] {
        &self.theta[(c - 1) * self.p..c * self.p]
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }

    pub fn gamma_index(&self) -> usize {
        self.theta.len() - 1
    }

    /// Express the same model with `new_ref` (1-based) as the reference class:
    /// `β′_c = β_c − β_new_ref` for every class, so `β′_new_ref ≡ 0`.
    ///
    /// Labels are not permuted, which is why the result carries the full
    /// `K × p` table. Joint probabilities of every arrangement are unchanged.
    pub fn re_reference(&self, new_ref: usize) -> Result<ReferencedParams> {
        if new_ref == 0 || new_ref > self.k {
            return Err(Error::InvalidArgument(format!(
                "reference class {new_ref} outside 1..={}",
                self.k
            )));
        }
        let r = new_ref - 1;
        let mut coefficients = vec![0.0; self.k * self.p];
        for c in 0..self.k {
            for j in 0..self.p {
                coefficients[c * self.p + j] = self.beta(c, j) - self.beta(r, j);
            }
        }
        Ok(ReferencedParams {
            p: self.p,
            k: self.k,
            reference: r,
            coefficients,
            gamma: self.gamma(),
        })
    }
}

/// Parameters with an arbitrary reference class: full `K × p` coefficient
/// table whose `reference` row is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencedParams {
    pub p: usize,
    pub k: usize,
    /// 0-based reference class.
    pub reference: usize,
    /// Row-major `K × p`: row `c` holds `β_c`.
    pub coefficients: Vec<f64>,
    pub gamma: f64,
}

impl ReferencedParams {
    pub fn beta(&self, c: usize, j: usize) -> f64 {
        self.coefficients[c * self.p + j]
    }

    /// Back to the standard form with class 1 as reference.
    pub fn to_standard(&self) -> Params {
        let mut theta = Vec::with_capacity(self.p * (self.k - 1) + 1);
        for c in 1..self.k {
            for j in 0..self.p {
                theta.push(self.beta(c, j) - self.beta(0, j));
            }
        }
        theta.push(self.gamma);
        Params {
            p: self.p,
            k: self.k,
            theta,
        }
    }
}

/// Sufficient statistic `s(y)`: class-major covariate sums for classes
/// `2..=K`, then the agreeing-pair count `S(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats(pub Vec<f64>);

impl SuffStats {
    pub fn agreement(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Number of unordered neighbor pairs with equal labels.
pub fn agreement_count(graph: &NeighborhoodGraph, labels: &[u32]) -> usize {
    graph
        .edges()
        .filter(|&(i, j)| labels[i] == labels[j])
        .count()
}

/// Model structure: class count, neighborhood graph and design.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    k: usize,
    graph: NeighborhoodGraph,
    design: DesignMatrix,
}

impl ModelSpec {
    pub fn new(k: usize, graph: NeighborhoodGraph, design: DesignMatrix) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
        }
        if graph.n_sites() != design.n() {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} sites but design has {} rows",
                graph.n_sites(),
                design.n()
            )));
        }
        Ok(Self { k, graph, design })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_sites(&self) -> usize {
        self.graph.n_sites()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    /// Length of `θ` and `s(y)`: `p(K−1) + 1`.
    pub fn p_total(&self) -> usize {
        self.p() * (self.k - 1) + 1
    }

    pub fn graph(&self) -> &NeighborhoodGraph {
        &self.graph
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Parameter names in flattening order: `beta_<class>_<column>`, `gamma`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.p_total());
        for c in 2..=self.k {
            for col in self.design.column_names() {
                names.push(format!("beta_{c}_{col}"));
            }
        }
        names.push(String::from("gamma"));
        names
    }

    pub fn check_arrangement(&self, y: &Arrangement) -> Result<()> {
        if y.len() != self.n_sites() {
            return Err(Error::DimensionMismatch(format!(
                "arrangement has {} sites, model has {}",
                y.len(),
                self.n_sites()
            )));
        }
        if let Some(site) = y.labels().iter().position(|&l| l as usize >= self.k) {
            return Err(Error::LabelOutOfRange {
                site,
                label: y.labels()[site] + 1,
                k: self.k,
            });
        }
        Ok(())
    }

    pub fn check_params(&self, theta: &Params) -> Result<()> {
        if theta.p() != self.p() || theta.k() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "parameters are for p={}, K={} but model has p={}, K={}",
                theta.p(),
                theta.k(),
                self.p(),
                self.k
            )));
        }
        Ok(())
    }

    pub fn suff_stats(&self, y: &Arrangement) -> Result<SuffStats> {
        self.check_arrangement(y)?;
        Ok(self.suff_stats_unchecked(y.labels()))
    }

    pub(crate) fn suff_stats_unchecked(&self, labels: &[u32]) -> SuffStats {
        let p = self.p();
        let mut s = vec![0.0; self.p_total()];
        for (i, &l) in labels.iter().enumerate() {
            if l > 0 {
                let base = (l as usize - 1) * p;
                for (acc, x) in s[base..base + p].iter_mut().zip(self.design.row(i)) {
                    *acc += x;
                }
            }
        }
        let last = s.len() - 1;
        s[last] = agreement_count(&self.graph, labels) as f64;
        SuffStats(s)
    }

    /// `log h(y | θ) = θ · s(y)`.
    pub fn log_unnormalized(&self, theta: &Params, y: &Arrangement) -> Result<f64> {
        self.check_params(theta)?;
        let s = self.suff_stats(y)?;
        Ok(math::dot(theta.as_slice(), s.as_slice()))
    }

    /// Site linear predictors `ηᵢ_c = xᵢᵗβ_c`, row-major `n × K` with a zero
    /// reference column.
    pub fn linear_predictors(&self, theta: &Params) -> Vec<f64> {
        let (n, k, p) = (self.n_sites(), self.k, self.p());
        let mut eta = vec![0.0; n * k];
        for i in 0..n {
            let x = self.design.row(i);
            for c in 1..k {
                eta[i * k + c] = math::dot(x, &theta.as_slice()[(c - 1) * p..c * p]);
            }
        }
        eta
    }

    /// Conditional class probabilities of site `i` given all other sites.
    pub fn full_conditional(&self, theta: &Params, y: &Arrangement, i: usize) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        self.check_arrangement(y)?;
        let counts = self.graph.neighbor_class_counts(y.labels(), i, self.k)?;
        let x = self.design.row(i);
        let gamma = theta.gamma();
        let logits: Vec<f64> = (0..self.k)
            .map(|c| {
                let lin = if c == 0 {
                    0.0
                } else {
                    math::dot(x, theta.beta_column(c))
                };
                lin + gamma * counts[c] as f64
            })
            .collect();
        Ok(softmax(&logits))
    }
}

/// Normalized `exp(logits)`.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|&l| math::exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}
