//! Neighborhood graphs over lattice sites.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which grid cells count as neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Connectivity {
    /// Horizontal and vertical neighbors (4-neighborhood).
    #[default]
    Rook,
    /// Rook neighbors plus diagonals (8-neighborhood).
    Queen,
}

/// A `rows × cols` regular grid. Sites are numbered in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub connectivity: Connectivity,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, connectivity: Connectivity) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid must have at least one row and column, got {rows}×{cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            connectivity,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn row_col(&self, site: usize) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }
}

/// Symmetric, irreflexive adjacency over `n_sites` sites in compressed row form.
///
/// Neighbor lists are sorted and free of duplicates; `edge_count` counts each
/// unordered pair once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edge_count: usize,
}

impl NeighborhoodGraph {
    /// Build from an undirected edge list. Reversed and repeated pairs collapse
    /// to one edge; self loops are rejected.
    pub fn from_edges(n_sites: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_sites];
        for &(i, j) in edges {
            for s in [i, j] {
                if s >= n_sites {
                    return Err(Error::SiteOutOfRange { site: s, n_sites });
                }
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self loop at site {i}")));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        let mut offsets = Vec::with_capacity(n_sites + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for set in &sets {
            neighbors.extend(set.iter().copied());
            offsets.push(neighbors.len());
        }
        let edge_count = neighbors.len() / 2;
        Ok(Self {
            offsets,
            neighbors,
            edge_count,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbors of site `i`. Panics if `i` is out of range.
    #[inline]
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_sites()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Each unordered edge `(i, j)` with `i < j`, in increasing order of `i`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_sites()).flat_map(move |i| {
            self.adjacency(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.n_sites() {
            return Err(Error::SiteOutOfRange {
                site: i,
                n_sites: self.n_sites(),
            });
        }
        Ok(())
    }

    /// Number of neighbors of site `i` in each class, for 0-based `labels`.
    pub fn neighbor_class_counts(&self, labels: &[u32], i: usize, k: usize) -> Result<Vec<usize>> {
        self.check_site(i)?;
        let mut counts = vec![0usize; k];
        for &j in self.adjacency(i) {
            let c = labels[j] as usize;
            if c >= k {
                return Err(Error::LabelOutOfRange {
                    site: j,
                    label: labels[j] + 1,
                    k,
                });
            }
            counts[c] += 1;
        }
        Ok(counts)
    }

    /// Partition of the sites into independent sets by greedy coloring in
    /// site order. Sites within one class share no edge, so they can be
    /// resampled simultaneously. Rook grids give the two checkerboard colors.
    pub fn color_classes(&self) -> Vec<Vec<usize>> {
        let n = self.n_sites();
        let mut color = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut used = Vec::new();
        for i in 0..n {
            used.clear();
            used.extend(
                self.adjacency(i)
                    .iter()
                    .map(|&j| color[j])
                    .filter(|&c| c != usize::MAX),
            );
            let c = (0..).find(|c| !used.contains(c)).unwrap_or(0);
            color[i] = c;
            if c == classes.len() {
                classes.push(Vec::new());
            }
            classes[c].push(i);
        }
        classes
    }
}

/// Neighborhood graph of a regular grid.
pub fn build_regular_grid(spec: &GridSpec) -> NeighborhoodGraph {
    let mut edges = Vec::new();
    let (rows, cols) = (spec.rows, spec.cols);
    for r in 0..rows {
        for c in 0..cols {
            let i = spec.site(r, c);
            if c + 1 < cols {
                edges.push((i, spec.site(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((i, spec.site(r + 1, c)));
            }
            if spec.connectivity == Connectivity::Queen && r + 1 < rows {
                if c + 1 < cols {
                    edges.push((i, spec.site(r + 1, c + 1)));
                }
                if c > 0 {
                    edges.push((i, spec.site(r + 1, c - 1)));
                }
            }
        }
    }
    NeighborhoodGraph::from_edges(spec.n_sites(), &edges).expect("grid edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, conn: Connectivity) -> NeighborhoodGraph {
        build_regular_grid(&GridSpec::new(rows, cols, conn).unwrap())
    }

    fn assert_symmetric_irreflexive(g: &NeighborhoodGraph) {
        let mut total = 0;
        for i in 0..g.n_sites() {
            let adj = g.adjacency(i);
            assert!(adj.windows(2).all(|w| w[0] < w[1]), "sorted, no duplicates");
            assert!(!adj.contains(&i));
            for &j in adj {
                assert!(g.adjacency(j).contains(&i));
            }
            total += adj.len();
        }
        assert_eq!(g.edge_count() * 2, total);
    }

    #[test]
    fn small_grid_edge_counts() {
        assert_eq!(grid(2, 2, Connectivity::Rook).edge_count(), 4);
        assert_eq!(grid(2, 2, Connectivity::Queen).edge_count(), 6);
        let g = grid(3, 3, Connectivity::Rook);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(4), 4);
        assert_eq!(grid(1, 1, Connectivity::Queen).edge_count(), 0);
    }

    #[test]
    fn generated_grids_are_symmetric() {
        for conn in [Connectivity::Rook, Connectivity::Queen] {
            for (r, c) in [(1, 1), (1, 5), (4, 3), (7, 7)] {
                assert_symmetric_irreflexive(&grid(r, c, conn));
            }
        }
    }

    #[test]
    fn grid_spec_rejects_empty() {
        assert!(GridSpec::new(0, 3, Connectivity::Rook).is_err());
    }

    #[test]
    fn edge_list_dedups_reversed_pairs() {
        let g = NeighborhoodGraph::from_edges(3, &[(0, 1), (1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.adjacency(1), &[0, 2]);
        assert_symmetric_irreflexive(&g);
        assert!(NeighborhoodGraph::from_edges(2, &[(0, 0)]).is_err());
        assert!(NeighborhoodGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn neighbor_counts() {
        let isolated = NeighborhoodGraph::from_edges(2, &[]).unwrap();
        assert_eq!(isolated.neighbor_class_counts(&[0, 1], 0, 2).unwrap(), [0, 0]);

        let g = grid(2, 2, Connectivity::Rook);
        assert_eq!(g.neighbor_class_counts(&[0; 4], 0, 2).unwrap(), [2, 0]);
        assert!(g.neighbor_class_counts(&[0; 4], 4, 2).is_err());
    }

    #[test]
    fn neighbor_counts_match_double_loop() {
        let spec = GridSpec::new(4, 4, Connectivity::Rook).unwrap();
        let g = build_regular_grid(&spec);
        let labels: Vec<u32> = (0..16u32).map(|i| (i * 7 + i / 3) % 3).collect();
        for i in 0..16 {
            let (ri, ci) = spec.row_col(i);
            let mut expected = [0usize; 3];
            for j in 0..16 {
                let (rj, cj) = spec.row_col(j);
                if ri.abs_diff(rj) + ci.abs_diff(cj) == 1 {
                    expected[labels[j] as usize] += 1;
                }
            }
            assert_eq!(g.neighbor_class_counts(&labels, i, 3).unwrap(), expected);
        }
    }

    #[test]
    fn rook_grid_is_two_colorable() {
        let g = grid(5, 4, Connectivity::Rook);
        let classes = g.color_classes();
        assert_eq!(classes.len(), 2);
        for class in &classes {
            for &i in class {
                assert!(g.adjacency(i).iter().all(|j| !class.contains(j)));
            }
        }
        assert_eq!(grid(4, 4, Connectivity::Queen).color_classes().len(), 4);
    }
}
