//! Binary PPM (P6) rendering of arrangements.

use anyhow::{bail, Result};
use automn_core::{Arrangement, GridSpec};

use crate::Invalid;

/// RGB color per class, class 1 first.
pub const PALETTE: [[u8; 3]; 8] = [
    [34, 139, 34],
    [218, 165, 32],
    [70, 130, 180],
    [178, 34, 34],
    [128, 0, 128],
    [255, 140, 0],
    [0, 139, 139],
    [105, 105, 105],
];

/// `cell_px × cell_px` pixels per cell, rows top to bottom.
pub fn render_ppm(y: &Arrangement, grid: &GridSpec, palette: &[[u8; 3]], cell_px: usize) -> Result<Vec<u8>> {
    if y.len() != grid.n_sites() {
        bail!(Invalid(format!(
            "arrangement has {} sites, grid {}×{} has {}",
            y.len(),
            grid.rows,
            grid.cols,
            grid.n_sites()
        )));
    }
    if cell_px == 0 {
        bail!(Invalid("cell size must be at least one pixel".into()));
    }
    let k = y.labels().iter().copied().max().map_or(0, |m| m as usize + 1);
    if k > palette.len() {
        bail!(Invalid(format!("palette has {} colors for {k} classes", palette.len())));
    }
    let (w, h) = (grid.cols * cell_px, grid.rows * cell_px);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for r in 0..grid.rows {
        for _ in 0..cell_px {
            for c in 0..grid.cols {
                let color = palette[y.labels()[grid.site(r, c)] as usize];
                for _ in 0..cell_px {
                    out.extend_from_slice(&color);
                }
            }
        }
    }
    Ok(out)
}
