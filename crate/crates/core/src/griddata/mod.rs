//! Household rasters: ingest, municipal-area compensation and protection discs.
//!
//! Cells are addressed by `x` (column) and `y` (row); linear indices are
//! row-major, `y * cols + x`.

mod bitgrid;
mod disc;

use std::io::{BufRead, Write};

use serde::Deserialize;

pub use bitgrid::BitGrid;
pub use disc::{
    dilate, dilate_with, protection_disc_offsets, protection_disc_offsets_with, DiscRule,
    Footprint, ProtectionMask,
};

use crate::error::{Error, Result};

/// Households per cell with a validity (in-municipality) mask.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdGrid {
    rows: usize,
    cols: usize,
    resolution_m: f64,
    counts: Vec<u32>,
    valid: Vec<bool>,
    municipal_area_km2: f64,
}

impl HouseholdGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn resolution_m(&self) -> f64 {
        self.resolution_m
    }

    pub fn municipal_area_km2(&self) -> f64 {
        self.municipal_area_km2
    }

    pub fn cell_area_km2(&self) -> f64 {
        (self.resolution_m / 1000.0).powi(2)
    }

    pub fn grid_area_km2(&self) -> f64 {
        self.len() as f64 * self.cell_area_km2()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.cols + x
    }

    pub fn households(&self, x: usize, y: usize) -> u32 {
        self.counts[self.index(x, y)]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn valid_cells(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn invalid_cells(&self) -> usize {
        self.len() - self.valid_cells()
    }

    pub fn total_households(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn valid_mask(&self) -> BitGrid {
        BitGrid::from_fn(self.rows, self.cols, |r, c| self.valid[r * self.cols + c])
    }

    /// Builds a grid from dense row-major counts; every cell starts valid.
    pub fn from_counts(
        rows: usize,
        cols: usize,
        resolution_m: f64,
        counts: Vec<u32>,
        municipal_area_km2: Option<f64>,
    ) -> Result<Self> {
        if counts.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                actual: (counts.len() / cols.max(1), cols),
            });
        }
        if !(resolution_m.is_finite() && resolution_m > 0.0) {
            return Err(Error::Ingest {
                line: None,
                message: format!("resolution must be positive, got {resolution_m}"),
            });
        }
        let area = (resolution_m / 1000.0).powi(2) * (rows * cols) as f64;
        let municipal_area_km2 = municipal_area_km2.unwrap_or(area);
        if !(municipal_area_km2.is_finite() && municipal_area_km2 >= 0.0) {
            return Err(Error::Ingest {
                line: None,
                message: format!("municipal area must be non-negative, got {municipal_area_km2}"),
            });
        }
        Ok(Self {
            rows,
            cols,
            resolution_m,
            valid: vec![true; counts.len()],
            counts,
            municipal_area_km2,
        })
    }

    /// Replaces the validity mask. Cells with households must stay valid.
    pub fn with_valid_mask(mut self, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                actual: (valid.len() / self.cols.max(1), self.cols),
            });
        }
        if let Some(i) = (0..self.len()).find(|&i| !valid[i] && self.counts[i] > 0) {
            return Err(Error::Ingest {
                line: None,
                message: format!(
                    "cell ({}, {}) has households but is marked outside the municipality",
                    i % self.cols,
                    i / self.cols
                ),
            });
        }
        self.valid = valid;
        Ok(self)
    }
}

/// One `x,y,households` record; `line` is kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRecord {
    pub x: i64,
    pub y: i64,
    pub households: i64,
    pub line: Option<u64>,
}

impl CellRecord {
    pub fn new(x: i64, y: i64, households: i64) -> Self {
        Self {
            x,
            y,
            households,
            line: None,
        }
    }
}

/// Sidecar metadata of a grid file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridMetadata {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub resolution_m: Option<f64>,
    pub municipal_area_km2: Option<f64>,
}

impl GridMetadata {
    /// Fields set in `other` take precedence.
    pub fn overridden_by(&self, other: &GridMetadata) -> GridMetadata {
        GridMetadata {
            rows: other.rows.or(self.rows),
            cols: other.cols.or(self.cols),
            resolution_m: other.resolution_m.or(self.resolution_m),
            municipal_area_km2: other.municipal_area_km2.or(self.municipal_area_km2),
        }
    }
}

/// Dense grid from sparse cell records. Absent cells hold zero households.
pub fn ingest_grid(
    records: impl IntoIterator<Item = CellRecord>,
    dims: Option<(usize, usize)>,
    resolution_m: f64,
    municipal_area_km2: Option<f64>,
) -> Result<HouseholdGrid> {
    let records: Vec<CellRecord> = records.into_iter().collect();
    let err = |r: &CellRecord, message: String| Error::Ingest {
        line: r.line,
        message,
    };
    for r in &records {
        if r.households < 0 {
            return Err(err(r, format!("negative household count {}", r.households)));
        }
        if r.x < 0 || r.y < 0 {
            return Err(err(r, format!("negative cell index ({}, {})", r.x, r.y)));
        }
        if r.households > u32::MAX as i64 {
            return Err(err(r, format!("household count {} too large", r.households)));
        }
    }
    let (rows, cols) = match dims {
        Some(d) => d,
        None => (
            records.iter().map(|r| r.y as usize + 1).max().unwrap_or(0),
            records.iter().map(|r| r.x as usize + 1).max().unwrap_or(0),
        ),
    };
    let mut counts = vec![0u32; rows * cols];
    let mut seen = vec![false; rows * cols];
    for r in &records {
        let (x, y) = (r.x as usize, r.y as usize);
        if x >= cols || y >= rows {
            return Err(err(
                r,
                format!("cell ({x}, {y}) outside the {rows}x{cols} grid"),
            ));
        }
        let i = y * cols + x;
        if std::mem::replace(&mut seen[i], true) {
            return Err(err(r, format!("duplicate cell ({x}, {y})")));
        }
        counts[i] = r.households as u32;
    }
    HouseholdGrid::from_counts(rows, cols, resolution_m, counts, municipal_area_km2)
}

/// Every cell exactly once, ring by ring from the outside in: top row left to
/// right, bottom row, left column, right column.
pub fn border_scan_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(rows * cols);
    let mut k = 0;
    while 2 * k < rows && 2 * k < cols {
        let (top, bottom) = (k, rows - 1 - k);
        let (left, right) = (k, cols - 1 - k);
        order.extend((left..=right).map(|c| (top, c)));
        if bottom != top {
            order.extend((left..=right).map(|c| (bottom, c)));
        }
        if bottom > top + 1 {
            order.extend((top + 1..bottom).map(|r| (r, left)));
            if right != left {
                order.extend((top + 1..bottom).map(|r| (r, right)));
            }
        }
        k += 1;
    }
    order
}

/// Number of cells whose removal brings the grid area down to the municipal area.
pub fn cells_to_invalidate(grid: &HouseholdGrid) -> Result<usize> {
    let cell_m2 = grid.resolution_m * grid.resolution_m;
    let grid_m2 = cell_m2 * grid.len() as f64;
    let muni_m2 = grid.municipal_area_km2 * 1e6;
    if muni_m2 > grid_m2 * (1.0 + 1e-12) {
        return Err(Error::Configuration(format!(
            "municipal area {} km2 exceeds the grid area {} km2",
            grid.municipal_area_km2,
            grid.grid_area_km2()
        )));
    }
    Ok((((grid_m2 - muni_m2) / cell_m2) + 1e-9).floor().max(0.0) as usize)
}

/// Marks household-free cells outside the municipality, scanning the border inward.
pub fn compensate_area(grid: &HouseholdGrid) -> Result<HouseholdGrid> {
    let required = cells_to_invalidate(grid)?;
    let mut valid = grid.valid.clone();
    let mut marked = 0;
    for (r, c) in border_scan_order(grid.rows, grid.cols) {
        if marked == required {
            break;
        }
        let i = r * grid.cols + c;
        if valid[i] && grid.counts[i] == 0 {
            valid[i] = false;
            marked += 1;
        }
    }
    if marked < required {
        return Err(Error::Compensation {
            required,
            available: marked,
        });
    }
    let mut out = grid.clone();
    out.valid = valid;
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    x: i64,
    y: i64,
    households: i64,
}

/// Reads `#`-prefixed `key = value` metadata lines followed by an
/// `x,y,households` CSV table.
pub fn read_grid_csv(reader: impl BufRead) -> Result<(GridMetadata, Vec<CellRecord>)> {
    let mut meta = GridMetadata::default();
    let mut body = String::new();
    // Source line number of every line kept in `body`.
    let mut source_lines = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line.map_err(|e| Error::Ingest {
            line: Some(line_no),
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            parse_metadata_line(rest, line_no, &mut meta)?;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        source_lines.push(line_no);
        body.push_str(trimmed);
        body.push('\n');
    }
    let source_line = |body_line: u64| source_lines.get(body_line as usize - 1).copied();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Ingest {
        line: source_lines.first().copied(),
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "households"] {
        return Err(Error::Ingest {
            line: source_lines.first().copied(),
            message: format!(
                "expected header `x,y,households`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let headers = headers.clone();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Ingest {
            line: e.position().and_then(|p| source_line(p.line())),
            message: e.to_string(),
        })?;
        let line = row.position().and_then(|p| source_line(p.line()));
        let parsed: CsvRow = row.deserialize(Some(&headers)).map_err(|e| Error::Ingest {
            line,
            message: e.to_string(),
        })?;
        records.push(CellRecord {
            x: parsed.x,
            y: parsed.y,
            households: parsed.households,
            line,
        });
    }
    Ok((meta, records))
}

fn parse_metadata_line(rest: &str, line: u64, meta: &mut GridMetadata) -> Result<()> {
    let Some((key, value)) = rest.split_once(['=', ':']) else {
        return Ok(());
    };
    let (key, value) = (key.trim(), value.trim());
    let bad = |what: &str| Error::Ingest {
        line: Some(line),
        message: format!("invalid {what} `{value}`"),
    };
    match key {
        "rows" => meta.rows = Some(value.parse().map_err(|_| bad("rows"))?),
        "cols" => meta.cols = Some(value.parse().map_err(|_| bad("cols"))?),
        "resolution_m" => meta.resolution_m = Some(value.parse().map_err(|_| bad("resolution"))?),
        "municipal_area_km2" => {
            meta.municipal_area_km2 = Some(value.parse().map_err(|_| bad("municipal area"))?)
        }
        _ => {}
    }
    Ok(())
}

/// Reads a grid file and ingests it; `overrides` beat the file's metadata.
pub fn load_grid(reader: impl BufRead, overrides: &GridMetadata) -> Result<HouseholdGrid> {
    let (meta, records) = read_grid_csv(reader)?;
    let meta = meta.overridden_by(overrides);
    let resolution = meta.resolution_m.ok_or_else(|| Error::Ingest {
        line: None,
        message: "grid resolution not given in file metadata or flags".into(),
    })?;
    let dims = match (meta.rows, meta.cols) {
        (Some(r), Some(c)) => Some((r, c)),
        (None, None) => None,
        _ => {
            return Err(Error::Ingest {
                line: None,
                message: "rows and cols must be given together".into(),
            })
        }
    };
    ingest_grid(records, dims, resolution, meta.municipal_area_km2)
}

/// Writes the grid as metadata lines plus sparse `x,y,households` rows.
pub fn write_grid_csv(grid: &HouseholdGrid, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# rows = {}", grid.rows)?;
    writeln!(w, "# cols = {}", grid.cols)?;
    writeln!(w, "# resolution_m = {}", grid.resolution_m)?;
    writeln!(w, "# municipal_area_km2 = {}", grid.municipal_area_km2)?;
    writeln!(w, "x,y,households")?;
    for y in 0..grid.rows {
        for x in 0..grid.cols {
            let n = grid.households(x, y);
            if n > 0 {
                writeln!(w, "{x},{y},{n}")?;
            }
        }
    }
    Ok(())
}
