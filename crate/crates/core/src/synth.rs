//! Synthetic household grids for demos, tests and benchmarks.
//!
//! Households are placed on a 100 m raster; coarser grids are exact
//! aggregates of it, so both resolutions describe the same population.

use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::griddata::HouseholdGrid;

pub const FINE_RESOLUTION_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Farms and cabins spread thinly along a few valleys.
    Scattered,
    /// A handful of villages with a thin rural remainder.
    Clustered,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Scattered => "scattered",
            Layout::Clustered => "clustered",
        }
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scattered" => Ok(Layout::Scattered),
            "clustered" => Ok(Layout::Clustered),
            other => Err(Error::Configuration(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub layout: Layout,
    /// Extent in kilometres.
    pub rows_km: usize,
    pub cols_km: usize,
    pub households: u32,
    pub municipal_area_km2: f64,
    /// Households are kept this far from the grid edge so area compensation
    /// has empty border cells to invalidate.
    pub margin_km: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// A large, sparsely populated mountain municipality.
    pub fn scattered() -> Self {
        Self {
            layout: Layout::Scattered,
            rows_km: 60,
            cols_km: 64,
            households: 1900,
            municipal_area_km2: 3106.0,
            margin_km: 5,
            seed: 1,
        }
    }

    /// A smaller municipality dominated by a few villages.
    pub fn clustered() -> Self {
        Self {
            layout: Layout::Clustered,
            rows_km: 40,
            cols_km: 40,
            households: 4000,
            municipal_area_km2: 1400.0,
            margin_km: 4,
            seed: 2,
        }
    }

    pub fn preset(layout: Layout) -> Self {
        match layout {
            Layout::Scattered => Self::scattered(),
            Layout::Clustered => Self::clustered(),
        }
    }
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn next(&mut self) -> f64 {
        (self.0.next_u32() as f64 + 0.5) / 4_294_967_296.0
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    fn normal(&mut self) -> f64 {
        let (u, v) = (self.next(), self.next());
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

/// Builds the grid at `resolution_m`, which must be a multiple of 100 m
/// dividing 1 km.
pub fn synthesize(spec: &SynthSpec, resolution_m: f64) -> Result<HouseholdGrid> {
    let fine = synthesize_fine(spec)?;
    let factor = resolution_m / FINE_RESOLUTION_M;
    if !(factor >= 1.0 && factor.fract() == 0.0 && (1000.0 / resolution_m).fract() == 0.0) {
        return Err(Error::InvalidParameter {
            name: "resolution_m",
            reason: format!("{resolution_m} m is not a multiple of 100 m dividing 1000 m"),
        });
    }
    aggregate(&fine, factor as usize)
}

fn synthesize_fine(spec: &SynthSpec) -> Result<HouseholdGrid> {
    let per_km = (1000.0 / FINE_RESOLUTION_M) as usize;
    let (rows, cols) = (spec.rows_km * per_km, spec.cols_km * per_km);
    let margin = spec.margin_km * per_km;
    if rows <= 2 * margin || cols <= 2 * margin {
        return Err(Error::InvalidParameter {
            name: "margin_km",
            reason: "margin leaves no interior".into(),
        });
    }
    let mut rng = Uniform(ChaCha8Rng::seed_from_u64(spec.seed));
    let (lo_y, hi_y) = (margin as f64, (rows - margin) as f64);
    let (lo_x, hi_x) = (margin as f64, (cols - margin) as f64);
    let mut counts = vec![0u32; rows * cols];
    let place = |x: f64, y: f64, counts: &mut [u32]| {
        let x = x.clamp(lo_x, hi_x - 1.0) as usize;
        let y = y.clamp(lo_y, hi_y - 1.0) as usize;
        counts[y * cols + x] += 1;
    };

    match spec.layout {
        Layout::Scattered => {
            // Valleys are straight bands; 70% of households live in them.
            let valleys: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| (rng.range(lo_y, hi_y), rng.range(-0.4, 0.4), rng.range(15.0, 40.0)))
                .collect();
            for h in 0..spec.households {
                if h % 10 < 7 {
                    let (y0, slope, width) = valleys[h as usize % valleys.len()];
                    let x = rng.range(lo_x, hi_x);
                    let y = y0 + slope * (x - lo_x) + width * rng.normal();
                    place(x, y, &mut counts);
                } else {
                    let (x, y) = (rng.range(lo_x, hi_x), rng.range(lo_y, hi_y));
                    place(x, y, &mut counts);
                }
            }
        }
        Layout::Clustered => {
            let villages: Vec<(f64, f64, f64)> = (0..5)
                .map(|_| (rng.range(lo_x, hi_x), rng.range(lo_y, hi_y), rng.range(4.0, 12.0)))
                .collect();
            for h in 0..spec.households {
                if h % 10 < 8 {
                    let (cx, cy, sigma) = villages[h as usize % villages.len()];
                    place(cx + sigma * rng.normal(), cy + sigma * rng.normal(), &mut counts);
                } else {
                    let (x, y) = (rng.range(lo_x, hi_x), rng.range(lo_y, hi_y));
                    place(x, y, &mut counts);
                }
            }
        }
    }
    HouseholdGrid::from_counts(
        rows,
        cols,
        FINE_RESOLUTION_M,
        counts,
        Some(spec.municipal_area_km2),
    )
}

/// Sums `factor × factor` blocks. The result has every cell valid.
pub fn aggregate(grid: &HouseholdGrid, factor: usize) -> Result<HouseholdGrid> {
    if factor == 0 || !grid.rows().is_multiple_of(factor) || !grid.cols().is_multiple_of(factor) {
        return Err(Error::InvalidParameter {
            name: "factor",
            reason: format!("{factor} does not divide a {}x{} grid", grid.rows(), grid.cols()),
        });
    }
    let (rows, cols) = (grid.rows() / factor, grid.cols() / factor);
    let mut counts = vec![0u32; rows * cols];
    for y in 0..grid.rows() {
        for x in 0..grid.cols() {
            counts[(y / factor) * cols + x / factor] += grid.households(x, y);
        }
    }
    HouseholdGrid::from_counts(
        rows,
        cols,
        grid.resolution_m() * factor as f64,
        counts,
        Some(grid.municipal_area_km2()),
    )
}
