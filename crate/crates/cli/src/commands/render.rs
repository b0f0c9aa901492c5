use std::path::Path;

use anyhow::{bail, Result};
use automn_core::{Connectivity, GridSpec};

use crate::io::{self, invalid};
use crate::render::{render_ppm, PALETTE};
use crate::Invalid;

pub fn run(arrangement: &Path, out: &Path, cell_px: usize, rows: Option<usize>, cols: Option<usize>) -> Result<()> {
    if cell_px == 0 {
        bail!(Invalid("cell size must be positive".into()));
    }
    let file = io::read_arrangement(arrangement, PALETTE.len())?;
    let (r, c) = match (file.dims, rows, cols) {
        (Some(d), None, None) => d,
        (_, Some(r), Some(c)) => (r, c),
        _ => bail!(Invalid("a site,label file needs both --rows and --cols".into())),
    };
    if r * c != file.arrangement.len() {
        bail!(Invalid(format!(
            "{} labels do not fill a {r}×{c} grid",
            file.arrangement.len()
        )));
    }
    let grid = GridSpec::new(r, c, Connectivity::Rook).map_err(invalid)?;
    let bytes = render_ppm(&file.arrangement, &grid, &PALETTE, cell_px)?;
    std::fs::write(out, bytes)?;
    Ok(())
}
