#![allow(dead_code)]

use automn_core::rng::{domain, substream, uniform, Stream};
use automn_core::{build_regular_grid, Connectivity, DesignMatrix, GridSpec, ModelSpec, Params};

pub fn rng(seed: u64) -> Stream {
    substream(seed, domain::SIMULATION, 0)
}

pub fn grid_spec(rows: usize, cols: usize, k: usize, design: Option<DesignMatrix>) -> ModelSpec {
    let g = build_regular_grid(&GridSpec::new(rows, cols, Connectivity::Rook).unwrap());
    let n = g.n_sites();
    ModelSpec::new(k, g, design.unwrap_or_else(|| DesignMatrix::intercept_only(n))).unwrap()
}

pub fn random_design(n: usize, p: usize, rng: &mut Stream) -> DesignMatrix {
    let values = (0..n * p).map(|_| 2.0 * uniform(rng) - 1.0).collect();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    DesignMatrix::new(n, p, values, names).unwrap()
}

pub fn random_theta(p: usize, k: usize, scale: f64, rng: &mut Stream) -> Params {
    let theta = (0..p * (k - 1) + 1).map(|_| scale * (2.0 * uniform(rng) - 1.0)).collect();
    Params::from_flat(p, k, theta).unwrap()
}

/// All arrangements of `n` sites over `k` classes, site 0 fastest.
pub fn all_arrangements(n: usize, k: usize) -> Vec<Vec<u32>> {
    let total = (k as u64).pow(n as u32) as usize;
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let l = (idx % k) as u32;
                    idx /= k;
                    l
                })
                .collect()
        })
        .collect()
}

/// Rook adjacency on a grid by coordinates, independent of the library graph.
pub fn rook_adjacent(cols: usize, a: usize, b: usize) -> bool {
    let (ra, ca) = (a / cols, a % cols);
    let (rb, cb) = (b / cols, b % cols);
    ra.abs_diff(rb) + ca.abs_diff(cb) == 1
}

/// `S(y)` by scanning all unordered pairs.
pub fn agreement_by_pairs(cols: usize, labels: &[u32]) -> usize {
    let n = labels.len();
    let mut s = 0;
    for i in 0..n {
        for j in i + 1..n {
            if rook_adjacent(cols, i, j) && labels[i] == labels[j] {
                s += 1;
            }
        }
    }
    s
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
