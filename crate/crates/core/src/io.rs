//! CSV fields and masks, with a TOML grid sidecar.
//!
//! A field file has header `index_0..index_{d-1},coord_0..coord_{d-1},value`,
//! one row per node in node order, `-inf` for `-∞`. The grid is stored next
//! to it in `<stem>.grid.toml`; without a sidecar it is inferred from the
//! rows. Mask files replace `value` by `member` with `0` or `1`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BoxGrid, ExtReal, ScalarField};
use crate::setgeom::GridSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Complex dimension.
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn of(grid: &BoxGrid) -> Self {
        GridSpec { dim: grid.dim_complex(), lo: grid.lo().to_vec(), hi: grid.hi().to_vec(), counts: grid.counts().to_vec() }
    }

    pub fn build(&self) -> Result<BoxGrid> {
        BoxGrid::new(self.dim, self.lo.clone(), self.hi.clone(), self.counts.clone())
    }
}

/// `<dir>/<stem>.grid.toml` for `<dir>/<stem>.csv`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.grid.toml"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn format_value(v: ExtReal) -> String {
    match v {
        ExtReal::NegInf => "-inf".into(),
        ExtReal::Finite(x) => format!("{x}"),
    }
}

pub fn parse_value(s: &str) -> Result<ExtReal> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("-inf") {
        return Ok(ExtReal::NegInf);
    }
    let x: f64 = t.parse().map_err(|_| Error::Parse(format!("bad value `{t}`")))?;
    ExtReal::from_f64(x).ok_or_else(|| Error::Parse(format!("value `{t}` is not a finite real or -inf")))
}

fn header(d: usize, last: &str) -> Vec<String> {
    let mut h: Vec<String> = (0..d).map(|a| format!("index_{a}")).collect();
    h.extend((0..d).map(|a| format!("coord_{a}")));
    h.push(last.into());
    h
}

fn write_rows<W: Write>(out: W, grid: &BoxGrid, last: &str, cell: impl Fn(usize) -> String) -> Result<()> {
    let d = grid.real_dim();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header(d, last)).map_err(csv_err)?;
    let mut row = Vec::with_capacity(2 * d + 1);
    for i in 0..grid.len() {
        row.clear();
        row.extend(grid.multi_index(i).iter().map(|m| m.to_string()));
        row.extend(grid.coord(i).iter().map(|c| format!("{c}")));
        row.push(cell(i));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_csv<W: Write>(out: W, field: &ScalarField) -> Result<()> {
    write_rows(out, field.grid(), "value", |i| format_value(field.get(i)))
}

pub fn write_mask_csv<W: Write>(out: W, set: &GridSet) -> Result<()> {
    write_rows(out, set.grid(), "member", |i| if set.contains(i) { "1".into() } else { "0".into() })
}

fn write_sidecar(path: &Path, grid: &BoxGrid) -> Result<()> {
    let text = toml::to_string(&GridSpec::of(grid)).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

/// Writes the CSV and its grid sidecar.
pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    write_field_csv(fs::File::create(path)?, field)?;
    write_sidecar(path, field.grid())
}

pub fn write_mask(path: &Path, set: &GridSet) -> Result<()> {
    write_mask_csv(fs::File::create(path)?, set)?;
    write_sidecar(path, set.grid())
}

struct Rows {
    d: usize,
    index: Vec<Vec<usize>>,
    coord: Vec<Vec<f64>>,
    last: Vec<String>,
}

fn read_rows<R: Read>(input: R, last: &str) -> Result<Rows> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let head = r.headers().map_err(csv_err)?.clone();
    let cols = head.len();
    if cols < 3 || (cols - 1) % 2 != 0 || head.get(cols - 1) != Some(last) {
        return Err(Error::Parse(format!("expected header index_*, coord_*, {last}")));
    }
    let d = (cols - 1) / 2;
    let mut rows = Rows { d, index: Vec::new(), coord: Vec::new(), last: Vec::new() };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
        let index = (0..d).map(|a| rec[a].parse::<usize>().map_err(|_| bad("index"))).collect::<Result<Vec<_>>>()?;
        let coord = (0..d).map(|a| rec[d + a].parse::<f64>().map_err(|_| bad("coordinate"))).collect::<Result<Vec<_>>>()?;
        rows.index.push(index);
        rows.coord.push(coord);
        rows.last.push(rec[2 * d].to_string());
    }
    if rows.index.is_empty() {
        return Err(Error::Empty("CSV has no rows".into()));
    }
    Ok(rows)
}

fn infer_grid(rows: &Rows) -> Result<BoxGrid> {
    let d = rows.d;
    if !d.is_multiple_of(2) {
        return Err(Error::Parse(format!("odd real dimension {d}")));
    }
    let mut counts = vec![0usize; d];
    let mut lo = vec![f64::NAN; d];
    let mut hi = vec![f64::NAN; d];
    for idx in &rows.index {
        for a in 0..d {
            counts[a] = counts[a].max(idx[a] + 1);
        }
    }
    for (idx, c) in rows.index.iter().zip(&rows.coord) {
        for a in 0..d {
            if idx[a] == 0 {
                lo[a] = c[a];
            }
            if idx[a] + 1 == counts[a] {
                hi[a] = c[a];
            }
        }
    }
    BoxGrid::new(d / 2, lo, hi, counts)
}

fn grid_for(path: Option<&Path>, rows: &Rows) -> Result<BoxGrid> {
    let grid = match path.map(sidecar_path).filter(|p| p.exists()) {
        Some(p) => {
            let spec: GridSpec = toml::from_str(&fs::read_to_string(&p)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            spec.build()?
        }
        None => infer_grid(rows)?,
    };
    if grid.real_dim() != rows.d {
        return Err(Error::DimensionMismatch { expected: grid.real_dim(), got: rows.d });
    }
    if rows.index.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} rows, got {}", grid.len(), rows.index.len())));
    }
    Ok(grid)
}

fn place<T: Clone>(grid: &BoxGrid, rows: &Rows, fill: T, cell: impl Fn(usize, &str) -> Result<T>) -> Result<Vec<T>> {
    let mut out = vec![None; grid.len()];
    for (k, idx) in rows.index.iter().enumerate() {
        if idx.iter().zip(grid.counts()).any(|(i, c)| i >= c) {
            return Err(Error::Parse(format!("row {}: index out of range", k + 2)));
        }
        let node = grid.linear_index(idx);
        if out[node].is_some() {
            return Err(Error::Parse(format!("row {}: duplicate node", k + 2)));
        }
        out[node] = Some(cell(k, &rows.last[k])?);
    }
    Ok(out.into_iter().map(|v| v.unwrap_or_else(|| fill.clone())).collect())
}

pub fn read_field_from<R: Read>(input: R, grid: Option<&BoxGrid>) -> Result<ScalarField> {
    let rows = read_rows(input, "value")?;
    let grid = match grid {
        Some(g) => g.clone(),
        None => infer_grid(&rows)?,
    };
    if rows.index.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} rows, got {}", grid.len(), rows.index.len())));
    }
    let values = place(&grid, &rows, ExtReal::NegInf, |_, s| parse_value(s))?;
    ScalarField::new(grid, values)
}

/// Reads a field, taking the grid from the sidecar when present.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let rows = read_rows(fs::File::open(path)?, "value")?;
    let grid = grid_for(Some(path), &rows)?;
    let values = place(&grid, &rows, ExtReal::NegInf, |_, s| parse_value(s))?;
    ScalarField::new(grid, values)
}

pub fn read_mask(path: &Path) -> Result<GridSet> {
    let rows = read_rows(fs::File::open(path)?, "member")?;
    let grid = grid_for(Some(path), &rows)?;
    let mask = place(&grid, &rows, false, |k, s| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse(format!("row {}: member must be 0 or 1", k + 2))),
    })?;
    GridSet::new(grid, mask)
}
