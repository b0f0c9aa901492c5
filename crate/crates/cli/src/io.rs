//! CSV and JSON file formats. Sites, rows, columns and labels are 1-based in
//! every file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use automn_core::dataprep::PointRecord;
use automn_core::dmh::ChainOutput;
use automn_core::{Arrangement, DesignMatrix, GridSpec, NeighborhoodGraph};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Invalid;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Invalid(format!("cannot open {}: {e}", path.display())).into())
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Invalid(format!("{}:{line}: bad {what} {field:?}", path.display())).into())
}

/// An arrangement read from disk, with grid dimensions when the file uses
/// `row,col,label`.
#[derive(Debug, Clone)]
pub struct ArrangementFile {
    pub arrangement: Arrangement,
    pub dims: Option<(usize, usize)>,
}

/// Read `row,col,label` (every cell exactly once) or `site,label`.
pub fn read_arrangement(path: &Path, k: usize) -> Result<ArrangementFile> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let line = |i: usize| i + 2;
    match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["row", "col", "label"] => {
            let mut cells = Vec::with_capacity(records.len());
            for (i, r) in records.iter().enumerate() {
                let row: usize = parse(&r[0], "row", path, line(i))?;
                let col: usize = parse(&r[1], "col", path, line(i))?;
                let label: u32 = parse(&r[2], "label", path, line(i))?;
                if row == 0 || col == 0 {
                    bail!(Invalid(format!("{}:{}: rows and columns are 1-based", path.display(), line(i))));
                }
                cells.push((row - 1, col - 1, label));
            }
            let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
            let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
            let mut labels = vec![0u32; rows * cols];
            let mut seen = vec![false; rows * cols];
            for &(r, c, l) in &cells {
                let s = r * cols + c;
                if seen[s] {
                    bail!(Invalid(format!("{}: cell ({}, {}) listed twice", path.display(), r + 1, c + 1)));
                }
                seen[s] = true;
                labels[s] = l;
            }
            if let Some(s) = seen.iter().position(|v| !v) {
                bail!(Invalid(format!(
                    "{}: cell ({}, {}) missing",
                    path.display(),
                    s / cols + 1,
                    s % cols + 1
                )));
            }
            Ok(ArrangementFile {
                arrangement: Arrangement::from_one_based(&labels, k).map_err(invalid)?,
                dims: Some((rows, cols)),
            })
        }
        ["site", "label"] => {
            let mut labels = vec![0u32; records.len()];
            let mut seen = vec![false; records.len()];
            for (i, r) in records.iter().enumerate() {
                let site: usize = parse(&r[0], "site", path, line(i))?;
                if site == 0 || site > records.len() || seen[site - 1] {
                    bail!(Invalid(format!("{}:{}: sites must be 1..n, each once", path.display(), line(i))));
                }
                seen[site - 1] = true;
                labels[site - 1] = parse(&r[1], "label", path, line(i))?;
            }
            Ok(ArrangementFile {
                arrangement: Arrangement::from_one_based(&labels, k).map_err(invalid)?,
                dims: None,
            })
        }
        _ => bail!(Invalid(format!(
            "{}: expected header row,col,label or site,label",
            path.display()
        ))),
    }
}

pub fn write_arrangement(path: &Path, y: &Arrangement, grid: Option<&GridSpec>) -> Result<()> {
    let mut w = create(path)?;
    let labels = y.to_one_based();
    match grid {
        Some(g) => {
            writeln!(w, "row,col,label")?;
            for (s, l) in labels.iter().enumerate() {
                let (r, c) = g.row_col(s);
                writeln!(w, "{},{},{l}", r + 1, c + 1)?;
            }
        }
        None => {
            writeln!(w, "site,label")?;
            for (s, l) in labels.iter().enumerate() {
                writeln!(w, "{},{l}", s + 1)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Header of column names, one row per site.
pub fn read_design(path: &Path) -> Result<DesignMatrix> {
    let mut rdr = reader(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let p = names.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != p {
            bail!(Invalid(format!("{}:{}: expected {p} fields", path.display(), i + 2)));
        }
        for f in rec.iter() {
            values.push(parse::<f64>(f, "value", path, i + 2)?);
        }
        n += 1;
    }
    DesignMatrix::new(n, p, values, names).map_err(invalid)
}

pub fn write_design(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", x.column_names().join(","))?;
    for i in 0..x.n() {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `i,j` pairs of 1-based sites.
pub fn read_edges(path: &Path, n_sites: usize) -> Result<NeighborhoodGraph> {
    let mut rdr = reader(path)?;
    let mut edges = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let a: usize = parse(&rec[0], "site", path, i + 2)?;
        let b: usize = parse(&rec[1], "site", path, i + 2)?;
        if a == 0 || b == 0 {
            bail!(Invalid(format!("{}:{}: sites are 1-based", path.display(), i + 2)));
        }
        edges.push((a - 1, b - 1));
    }
    NeighborhoodGraph::from_edges(n_sites, &edges).map_err(invalid)
}

/// Point CSV: `x,y,class,<covariates…>`. Returns the records and covariate names.
pub fn read_points(path: &Path) -> Result<(Vec<PointRecord>, Vec<String>)> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.len() < 3 || headers[0] != "x" || headers[1] != "y" || headers[2] != "class" {
        bail!(Invalid(format!("{}: header must start with x,y,class", path.display())));
    }
    let names = headers[3..].to_vec();
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            bail!(Invalid(format!("{}:{}: expected {} fields", path.display(), i + 2, headers.len())));
        }
        let covariates = rec
            .iter()
            .skip(3)
            .map(|f| parse(f, "covariate", path, i + 2))
            .collect::<Result<Vec<f64>>>()?;
        points.push(PointRecord {
            x: parse(&rec[0], "x", path, i + 2)?,
            y: parse(&rec[1], "y", path, i + 2)?,
            class_raw: rec[2].to_owned(),
            covariates,
        });
    }
    Ok((points, names))
}

fn accepts_string(flags: &[bool]) -> String {
    flags.iter().map(|&a| if a { '1' } else { '0' }).collect()
}

/// `iter,<names>,log_h,block_accepts`, one row per retained draw.
pub fn write_chain(path: &Path, chain: &ChainOutput) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "iter,{},log_h,block_accepts", chain.param_names.join(","))?;
    for t in 0..chain.n_draws() {
        write!(w, "{}", chain.iterations[t])?;
        for v in chain.draw(t) {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{},{}", chain.log_h[t], accepts_string(&chain.block_accepts[t]))?;
    }
    w.flush()?;
    Ok(())
}

/// Chain CSV plus the bookkeeping in its sidecar, when present.
pub fn read_chain(path: &Path) -> Result<ChainOutput> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let d = headers.len().saturating_sub(3);
    if headers.len() < 4
        || headers[0] != "iter"
        || headers[d + 1] != "log_h"
        || headers[d + 2] != "block_accepts"
    {
        bail!(Invalid(format!(
            "{}: header must be iter,<parameters>,log_h,block_accepts",
            path.display()
        )));
    }
    let mut out = ChainOutput {
        param_names: headers[1..=d].to_vec(),
        draws: Vec::new(),
        iterations: Vec::new(),
        log_h: Vec::new(),
        block_accepts: Vec::new(),
        accepted: Vec::new(),
        attempted: Vec::new(),
        seed: 0,
        chain: 0,
        inner_sweeps: 0,
        completed_iterations: 0,
        truncated: false,
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.iterations.push(parse(&rec[0], "iteration", path, line)?);
        for j in 1..=d {
            out.draws.push(parse(&rec[j], "value", path, line)?);
        }
        out.log_h.push(parse(&rec[d + 1], "log_h", path, line)?);
        let flags: Vec<bool> = rec[d + 2]
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Invalid(format!("{}:{line}: bad block_accepts", path.display()))),
            })
            .collect::<std::result::Result<_, _>>()?;
        out.block_accepts.push(flags);
    }
    let n_blocks = out.block_accepts.first().map_or(0, Vec::len);
    out.accepted = (0..n_blocks)
        .map(|b| out.block_accepts.iter().filter(|f| f[b]).count())
        .collect();
    out.attempted = vec![out.n_draws(); n_blocks];
    out.completed_iterations = out.iterations.last().copied().unwrap_or(0);

    let sidecar = path.with_extension("json");
    if sidecar.exists() {
        let meta: crate::commands::fit_dmh::ChainMeta = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)
            .with_context(|| format!("reading {}", sidecar.display()))?;
        out.seed = meta.seed;
        out.chain = meta.chain;
        out.inner_sweeps = meta.inner_sweeps;
        out.accepted = meta.accepted;
        out.attempted = meta.attempted;
        out.completed_iterations = meta.completed_iterations;
        out.truncated = meta.truncated;
    }
    Ok(out)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Pretty JSON with a trailing newline; key order follows the struct.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Input file with its digest, as recorded in manifests.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digests(paths: &[&Path]) -> Result<Vec<InputDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.to_path_buf(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

pub fn invalid(e: automn_core::Error) -> anyhow::Error {
    crate::classify(e)
}
