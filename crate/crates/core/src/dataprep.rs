//! Aggregation of point observations onto a regular grid.
//!
//! Cells are binned half-open, `[edge, next_edge)`, with the last row and
//! column closed so every in-bounds point lands in exactly one cell. Row 0 is
//! the northern strip (`y` near `ymax`), matching raster order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{Arrangement, DesignMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub class_raw: String,
    pub covariates: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregationSpec {
    pub bounds: Bounds,
    pub rows: usize,
    pub cols: usize,
    /// Raw label to class in `1..=K`.
    pub class_mapping: BTreeMap<String, u32>,
}

impl AggregationSpec {
    pub fn k(&self) -> usize {
        self.class_mapping.values().copied().max().unwrap_or(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.xmin < b.xmax && b.ymin < b.ymax) {
            return Err(Error::InvalidArgument(String::from("aggregation bounds are empty")));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument(String::from("grid must have at least one cell")));
        }
        if self.class_mapping.values().any(|&c| c == 0) {
            return Err(Error::InvalidArgument(String::from("mapped classes are 1-based")));
        }
        Ok(())
    }

    /// `(row, col)` of an in-bounds point.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let b = &self.bounds;
        if !b.contains(x, y) {
            return None;
        }
        let bin = |offset: f64, width: f64, count: usize| {
            let t = offset / width * count as f64;
            (libm::floor(t) as usize).min(count - 1)
        };
        let col = bin(x - b.xmin, b.xmax - b.xmin, self.cols);
        let row = bin(b.ymax - y, b.ymax - b.ymin, self.rows);
        Some((row, col))
    }
}

/// Aggregated grid: labels, mean covariates and per-cell point counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub arrangement: Arrangement,
    pub design: DesignMatrix,
    pub counts: Vec<usize>,
}

/// Replace each raw label by its mapped class number.
pub fn recode_classes(points: &[PointRecord], mapping: &BTreeMap<String, u32>) -> Result<Vec<PointRecord>> {
    points
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let class = lookup(mapping, &p.class_raw, idx)?;
            Ok(PointRecord {
                class_raw: class.to_string(),
                ..p.clone()
            })
        })
        .collect()
}

fn lookup(mapping: &BTreeMap<String, u32>, label: &str, idx: usize) -> Result<u32> {
    mapping.get(label).copied().ok_or_else(|| Error::UnmappedClass {
        label: label.to_string(),
        record: idx + 1,
    })
}

/// Majority class and mean covariates per cell. Points outside the bounds are
/// dropped; ties go to the lowest class.
pub fn aggregate(points: &[PointRecord], spec: &AggregationSpec, covariate_names: &[String]) -> Result<Aggregated> {
    spec.validate()?;
    let k = spec.k();
    let p = covariate_names.len();
    let n = spec.rows * spec.cols;
    let mut class_counts = vec![0usize; n * k];
    let mut sums = vec![0.0; n * p];
    let mut counts = vec![0usize; n];
    for (idx, point) in points.iter().enumerate() {
        let class = lookup(&spec.class_mapping, &point.class_raw, idx)?;
        if point.covariates.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "record {} has {} covariates, expected {p}",
                idx + 1,
                point.covariates.len()
            )));
        }
        let Some((r, c)) = spec.cell_of(point.x, point.y) else {
            continue;
        };
        let cell = r * spec.cols + c;
        counts[cell] += 1;
        class_counts[cell * k + class as usize - 1] += 1;
        for (s, v) in sums[cell * p..(cell + 1) * p].iter_mut().zip(&point.covariates) {
            *s += v;
        }
    }
    let empty: Vec<(usize, usize)> = (0..n)
        .filter(|&cell| counts[cell] == 0)
        .map(|cell| (cell / spec.cols, cell % spec.cols))
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyCells(empty));
    }
    let labels = (0..n)
        .map(|cell| {
            let row = &class_counts[cell * k..(cell + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect();
    for cell in 0..n {
        for s in &mut sums[cell * p..(cell + 1) * p] {
            *s /= counts[cell] as f64;
        }
    }
    Ok(Aggregated {
        arrangement: Arrangement::from_zero_based(labels),
        design: DesignMatrix::new(n, p, sums, covariate_names.to_vec())?,
        counts,
    })
}

/// Column centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Z-score every column (sample sd). Constant columns are only centered.
pub fn standardize(design: &DesignMatrix) -> Result<(DesignMatrix, Standardization)> {
    let (n, p) = (design.n(), design.p());
    if n < 2 {
        return Err(Error::InvalidArgument(String::from("standardization needs at least two rows")));
    }
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let m = (0..n).map(|i| design.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (design.get(i, j) - m) * (design.get(i, j) - m)).sum::<f64>() / (n - 1) as f64;
        means[j] = m;
        sds[j] = if var > 0.0 { math::sqrt(var) } else { 1.0 };
    }
    let values = (0..n * p)
        .map(|idx| (design.values()[idx] - means[idx % p]) / sds[idx % p])
        .collect();
    let scaled = DesignMatrix::new(n, p, values, design.column_names().to_vec())?;
    Ok((scaled, Standardization { means, sds }))
}
