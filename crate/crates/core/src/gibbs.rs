//! Single-site Gibbs sampling from the automultinomial model.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::math;
use crate::model::{Arrangement, ModelSpec, Params};
use crate::rng::uniform;
use crate::Result;

/// Site visiting order within one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ScanOrder {
    /// Sequential row-major order; site `i` sees the new values of sites `j < i`.
    #[default]
    Raster,
    /// Color classes of the graph in turn (the two checkerboard colors on rook
    /// grids). Sites of one class are mutually non-adjacent and are updated
    /// from the same state.
    Checkerboard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSchedule {
    pub mode: ScanOrder,
    pub sweeps: usize,
}

/// Gibbs kernel at a fixed parameter value. Holds the precomputed linear
/// predictors so repeated sweeps cost `O(n (K + degree))` each.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    spec: &'a ModelSpec,
    eta: Vec<f64>,
    gamma: f64,
    weights: Vec<f64>,
    counts: Vec<u32>,
    colors: Option<Vec<Vec<usize>>>,
    uniforms: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(spec: &'a ModelSpec, theta: &Params) -> Result<Self> {
        spec.check_params(theta)?;
        let k = spec.k();
        Ok(Self {
            spec,
            eta: spec.linear_predictors(theta),
            gamma: theta.gamma(),
            weights: vec![0.0; k],
            counts: vec![0; k],
            colors: None,
            uniforms: Vec::new(),
        })
    }

    /// Move the kernel to a new parameter value.
    pub fn set_params(&mut self, theta: &Params) -> Result<()> {
        self.spec.check_params(theta)?;
        self.eta = self.spec.linear_predictors(theta);
        self.gamma = theta.gamma();
        Ok(())
    }

    /// Conditional class probabilities of site `i` given `labels`.
    pub fn site_probabilities(&mut self, labels: &[u32], i: usize) -> Vec<f64> {
        let total = self.fill_weights(labels, i);
        self.weights.iter().map(|w| w / total).collect()
    }

    #[inline]
    fn fill_weights(&mut self, labels: &[u32], i: usize) -> f64 {
        let k = self.counts.len();
        self.counts.fill(0);
        for &j in self.spec.graph().adjacency(i) {
            self.counts[labels[j] as usize] += 1;
        }
        let eta = &self.eta[i * k..(i + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            let w = eta[c] + self.gamma * self.counts[c] as f64;
            self.weights[c] = w;
            max = max.max(w);
        }
        let mut total = 0.0;
        for w in &mut self.weights {
            *w = math::exp(*w - max);
            total += *w;
        }
        total
    }

    /// Categorical draw for site `i` from one uniform by cumulative scan.
    #[inline]
    fn draw_site(&mut self, labels: &[u32], i: usize, u: f64) -> u32 {
        let total = self.fill_weights(labels, i);
        let target = u * total;
        let mut acc = 0.0;
        let last = self.weights.len() - 1;
        for (c, &w) in self.weights[..last].iter().enumerate() {
            acc += w;
            if target < acc {
                return c as u32;
            }
        }
        last as u32
    }

    /// Resample every site once.
    pub fn sweep<R: Rng + ?Sized>(&mut self, labels: &mut [u32], mode: ScanOrder, rng: &mut R) {
        match mode {
            ScanOrder::Raster => {
                for i in 0..labels.len() {
                    let u = uniform(rng);
                    labels[i] = self.draw_site(labels, i, u);
                }
            }
            ScanOrder::Checkerboard => {
                let colors = self
                    .colors
                    .take()
                    .unwrap_or_else(|| self.spec.graph().color_classes());
                let mut uniforms = core::mem::take(&mut self.uniforms);
                for class in &colors {
                    uniforms.clear();
                    uniforms.extend((0..class.len()).map(|_| uniform(rng)));
                    // sites in a class are non-adjacent, so in-place updates
                    // see the same neighbor state a simultaneous update would
                    for (&i, &u) in class.iter().zip(&uniforms) {
                        labels[i] = self.draw_site(labels, i, u);
                    }
                }
                self.uniforms = uniforms;
                self.colors = Some(colors);
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        labels: &mut [u32],
        sweeps: usize,
        mode: ScanOrder,
        rng: &mut R,
    ) {
        for _ in 0..sweeps {
            self.sweep(labels, mode, rng);
        }
    }
}

/// One full sweep from `y`.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    spec: &ModelSpec,
    theta: &Params,
    y: &Arrangement,
    mode: ScanOrder,
    rng: &mut R,
) -> Result<Arrangement> {
    sample(spec, theta, y, SweepSchedule { mode, sweeps: 1 }, rng)
}

/// `schedule.sweeps` sweeps starting from `init`; returns the final state.
pub fn sample<R: Rng + ?Sized>(
    spec: &ModelSpec,
    theta: &Params,
    init: &Arrangement,
    schedule: SweepSchedule,
    rng: &mut R,
) -> Result<Arrangement> {
    spec.check_arrangement(init)?;
    let mut sampler = GibbsSampler::new(spec, theta)?;
    let mut state = init.clone();
    sampler.run(state.labels_mut(), schedule.sweeps, schedule.mode, rng);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_regular_grid, Connectivity, GridSpec, NeighborhoodGraph};
    use crate::model::DesignMatrix;
    use crate::oracle::ExactModel;
    use crate::rng::{domain, substream};
    use alloc::vec;

    fn potts(rows: usize, cols: usize, k: usize) -> ModelSpec {
        let g = build_regular_grid(&GridSpec::new(rows, cols, Connectivity::Rook).unwrap());
        let n = g.n_sites();
        ModelSpec::new(k, g, DesignMatrix::intercept_only(n)).unwrap()
    }

    #[test]
    fn zero_sweeps_is_identity() {
        let spec = potts(3, 3, 3);
        let theta = Params::from_flat(1, 3, vec![0.2, -0.3, 0.8]).unwrap();
        let init = Arrangement::from_zero_based(vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
        let mut rng = substream(1, domain::SIMULATION, 0);
        let out = sample(&spec, &theta, &init, SweepSchedule { mode: ScanOrder::Raster, sweeps: 0 }, &mut rng).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let spec = potts(6, 5, 3);
        let theta = Params::from_flat(1, 3, vec![0.2, -0.3, 0.8]).unwrap();
        let init = Arrangement::constant(30, 0);
        for mode in [ScanOrder::Raster, ScanOrder::Checkerboard] {
            let schedule = SweepSchedule { mode, sweeps: 20 };
            let a = sample(&spec, &theta, &init, schedule, &mut substream(9, domain::SIMULATION, 0)).unwrap();
            let b = sample(&spec, &theta, &init, schedule, &mut substream(9, domain::SIMULATION, 0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_site_frequencies_match_logistic_probabilities() {
        let g = NeighborhoodGraph::from_edges(1, &[]).unwrap();
        let design = DesignMatrix::new(1, 2, vec![1.0, 0.5], vec!["a".into(), "b".into()]).unwrap();
        let spec = ModelSpec::new(3, g, design).unwrap();
        let theta = Params::from_flat(2, 3, vec![0.4, -0.2, -0.5, 0.6, 0.0]).unwrap();
        let l = [0.0, 0.4 - 0.1, -0.5 + 0.3];
        let z: f64 = l.iter().map(|v| libm::exp(*v)).sum();
        let mut rng = substream(3, domain::SIMULATION, 0);
        let mut sampler = GibbsSampler::new(&spec, &theta).unwrap();
        let mut labels = vec![0u32];
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            sampler.sweep(&mut labels, ScanOrder::Raster, &mut rng);
            counts[labels[0] as usize] += 1;
        }
        for c in 0..3 {
            let p = libm::exp(l[c]) / z;
            let se = libm::sqrt(p * (1.0 - p) / n as f64);
            assert!((counts[c] as f64 / n as f64 - p).abs() < 3.0 * se, "class {c}");
        }
    }

    #[test]
    fn site_update_satisfies_detailed_balance() {
        for (rows, cols) in [(1, 2), (2, 2)] {
            let spec = potts(rows, cols, 3);
            let theta = Params::from_flat(1, 3, vec![0.3, -0.4, 0.7]).unwrap();
            let exact = ExactModel::new(&spec).unwrap();
            let dist = exact.distribution(&theta);
            let mut sampler = GibbsSampler::new(&spec, &theta).unwrap();
            for idx in 0..exact.n_configs() {
                let y = exact.arrangement(idx);
                for i in 0..spec.n_sites() {
                    let probs = sampler.site_probabilities(y.labels(), i);
                    for c in 0..3u32 {
                        let mut y2 = y.clone();
                        y2.labels_mut()[i] = c;
                        let back = sampler.site_probabilities(y2.labels(), i);
                        let forward = libm::exp(dist.log_probs[idx]) * probs[c as usize];
                        let reverse = libm::exp(dist.log_probs[exact.index_of(&y2)])
                            * back[y.labels()[i] as usize];
                        assert!((forward - reverse).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn strong_coupling_drives_agreement_up() {
        let spec = potts(12, 12, 3);
        let theta = Params::from_flat(1, 3, vec![0.0, 0.0, 2.0]).unwrap();
        let mut rng = substream(5, domain::SIMULATION, 0);
        let mut labels: Vec<u32> = (0..144).map(|_| (uniform(&mut rng) * 3.0) as u32).collect();
        let mut sampler = GibbsSampler::new(&spec, &theta).unwrap();
        let s0 = crate::model::agreement_count(spec.graph(), &labels);
        let mut trace = vec![s0];
        for _ in 0..4 {
            sampler.run(&mut labels, 10, ScanOrder::Raster, &mut rng);
            trace.push(crate::model::agreement_count(spec.graph(), &labels));
        }
        assert!(trace[4] > trace[0]);
        assert!(trace[4] as f64 > 0.8 * spec.graph().edge_count() as f64);
    }

    #[test]
    fn scan_orders_agree_in_the_long_run() {
        let spec = potts(3, 3, 2);
        let theta = Params::from_flat(1, 2, vec![0.3, 0.4]).unwrap();
        let exact = ExactModel::new(&spec).unwrap();
        let exact_mean_s = exact.moments(&theta).mean[1];
        let mut means = Vec::new();
        for (mode, stream) in [(ScanOrder::Raster, 0), (ScanOrder::Checkerboard, 1)] {
            let mut rng = substream(11, domain::SIMULATION, stream);
            let mut sampler = GibbsSampler::new(&spec, &theta).unwrap();
            let mut labels = vec![0u32; 9];
            let n = 40_000;
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                sampler.run(&mut labels, 2, mode, &mut rng);
                vals.push(crate::model::agreement_count(spec.graph(), &labels) as f64);
            }
            let (mean, se) = crate::summary::mean_and_batch_se(&vals, 40);
            assert!((mean - exact_mean_s).abs() < 3.0 * se, "{mode:?}: {mean} vs {exact_mean_s} (se {se})");
            means.push((mean, se));
        }
        let diff = (means[0].0 - means[1].0).abs();
        let se = libm::sqrt(means[0].1 * means[0].1 + means[1].1 * means[1].1);
        assert!(diff < 3.0 * se);
    }
}
