//! The tabular ray-tracing dataset: one row of ten features per grid cell
//! (strongest path) or per traced path.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::raytrace::{CoverageMap, PropagationPath};
use crate::scene::GridSpec;

pub const HEADER: &str = "x,y,zen_aod,azi_aod,zen_aoa,azi_aoa,theta_re,theta_im,phase,delay";
pub const N_FEATURES: usize = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: expected {N_FEATURES} columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing or unexpected header")]
    Header,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetMode {
    PerCell,
    PerPath,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DatasetRow {
    pub x: f64,
    pub y: f64,
    pub zen_aod: f64,
    pub azi_aod: f64,
    pub zen_aoa: f64,
    pub azi_aoa: f64,
    pub theta_re: f64,
    pub theta_im: f64,
    pub phase: f64,
    pub delay: f64,
}

impl DatasetRow {
    /// Coordinates only; every RF field zero.
    pub fn dead(x: f64, y: f64) -> Self {
        DatasetRow { x, y, ..Default::default() }
    }

    pub fn from_path(x: f64, y: f64, p: &PropagationPath) -> Self {
        DatasetRow {
            x,
            y,
            zen_aod: p.zen_aod,
            azi_aod: p.azi_aod,
            zen_aoa: p.zen_aoa,
            azi_aoa: p.azi_aoa,
            theta_re: p.theta.re,
            theta_im: p.theta.im,
            phase: p.phase,
            delay: p.delay,
        }
    }

    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.x,
            self.y,
            self.zen_aod,
            self.azi_aod,
            self.zen_aoa,
            self.azi_aoa,
            self.theta_re,
            self.theta_im,
            self.phase,
            self.delay,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        let [x, y, zen_aod, azi_aod, zen_aoa, azi_aoa, theta_re, theta_im, phase, delay] = a;
        DatasetRow { x, y, zen_aod, azi_aod, zen_aoa, azi_aoa, theta_re, theta_im, phase, delay }
    }
}

/// Rows ordered by cell with `j` outer, as in [`GridSpec::cells`]; within a
/// cell, per-path rows follow the map's path order (shortest first).
pub fn generate_dataset(map: &CoverageMap, mode: DatasetMode) -> Vec<DatasetRow> {
    let grid = &map.grid;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, j) in grid.cells() {
        let [x, y] = grid.cell_center(i, j);
        let cell = map.cell(i, j);
        match mode {
            DatasetMode::PerCell => rows.push(match cell.strongest_path() {
                Some(p) => DatasetRow::from_path(x, y, p),
                None => DatasetRow::dead(x, y),
            }),
            DatasetMode::PerPath => {
                rows.extend(cell.paths.iter().map(|p| DatasetRow::from_path(x, y, p)))
            }
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[DatasetRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        let a = r.to_array();
        let mut first = true;
        for v in a {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "{v:.16e}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Inverse of [`write_csv`]. Line numbers in errors are 1-based and count
/// the header. Lines starting with `#` are skipped.
pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.starts_with('#')));
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(DatasetError::Header),
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let line = line?;
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != N_FEATURES {
            return Err(DatasetError::ColumnCount { line: line_no, found: fields.len() });
        }
        let mut a = [0.0; N_FEATURES];
        for (slot, f) in a.iter_mut().zip(&fields) {
            *slot = f.trim().parse().map_err(|e| DatasetError::Malformed {
                line: line_no,
                message: format!("\"{f}\": {e}"),
            })?;
        }
        rows.push(DatasetRow::from_array(a));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub grid_size: (usize, usize),
    pub data_rows: usize,
    /// Size of the CSV [`write_csv`] produces.
    pub file_bytes: usize,
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "grid [{},{}], rows {}, bytes {}",
            self.grid_size.0, self.grid_size.1, self.data_rows, self.file_bytes
        )
    }
}

pub fn stats(rows: &[DatasetRow], grid: &GridSpec) -> DatasetStats {
    if rows.is_empty() && grid.is_empty() {
        return DatasetStats::default();
    }
    let mut counter = ByteCounter(0);
    write_csv(rows, &mut counter).expect("counting never fails");
    DatasetStats {
        grid_size: (grid.nx, grid.ny),
        data_rows: rows.len(),
        file_bytes: counter.0,
    }
}

struct ByteCounter(usize);

impl Write for ByteCounter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0 += buf.len();
        Ok(buf.len())
    }
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
