//! Protection footprints and their dilation over receiver masks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bitgrid::{or_shifted, BitGrid};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linkbudget::ChannelRelation;

/// Which cells count as inside a protection radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscRule {
    /// The receiver may be anywhere in its cell: a cell is protected when the
    /// closest points of the two cell squares are nearer than the radius.
    #[default]
    CellToCell,
    /// Circle centred on the receiver cell's centre; every cell it intersects.
    CenterCircle,
}

impl std::str::FromStr for DiscRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cell-to-cell" => Ok(DiscRule::CellToCell),
            "center-circle" => Ok(DiscRule::CenterCircle),
            other => Err(Error::Configuration(format!(
                "unknown disc rule `{other}` (expected cell-to-cell or center-circle)"
            ))),
        }
    }
}

/// A set of `(dx, dy)` cell offsets stamped around every receiver.
///
/// `dx` runs along columns and `dy` along rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    offsets: Vec<(i32, i32)>,
}

impl Footprint {
    pub fn from_offsets(mut offsets: Vec<(i32, i32)>) -> Self {
        offsets.sort_by_key(|&(dx, dy)| (dy, dx));
        offsets.dedup();
        Self { offsets }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains(&self, dx: i32, dy: i32) -> bool {
        self.offsets
            .binary_search_by_key(&(dy, dx), |&(x, y)| (y, x))
            .is_ok()
    }

    /// Contiguous `dx` runs per `dy`.
    fn spans(&self) -> BTreeMap<i32, Vec<(i32, i32)>> {
        let mut spans: BTreeMap<i32, Vec<(i32, i32)>> = BTreeMap::new();
        for &(dx, dy) in &self.offsets {
            let runs = spans.entry(dy).or_default();
            match runs.last_mut() {
                Some((_, end)) if *end + 1 == dx => *end = dx,
                _ => runs.push((dx, dx)),
            }
        }
        spans
    }
}

/// Offsets of every cell protected around a receiver, for a radius already
/// quantized to the grid resolution.
pub fn protection_disc_offsets(radius_m: f64, resolution_m: f64) -> Result<Footprint> {
    protection_disc_offsets_with(radius_m, resolution_m, DiscRule::default())
}

pub fn protection_disc_offsets_with(
    radius_m: f64,
    resolution_m: f64,
    rule: DiscRule,
) -> Result<Footprint> {
    if !(resolution_m.is_finite() && resolution_m > 0.0) {
        return Err(Error::Domain(format!(
            "grid resolution must be positive, got {resolution_m}"
        )));
    }
    let cells = radius_m / resolution_m;
    if !(radius_m.is_finite() && radius_m > 0.0) || (cells - cells.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "protection radius {radius_m} m is not a positive multiple of the {resolution_m} m resolution"
        )));
    }
    let r = cells.round() as i64;
    // Squared distances in the rule's own unit (cells, or half cells).
    let (limit, gap): (i64, fn(i64) -> i64) = match rule {
        DiscRule::CellToCell => (r * r, |k| (k.abs() - 1).max(0)),
        DiscRule::CenterCircle => (4 * r * r, |k| (2 * k.abs() - 1).max(0)),
    };
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let (gx, gy) = (gap(dx), gap(dy));
            if gx * gx + gy * gy < limit {
                offsets.push((dx as i32, dy as i32));
            }
        }
    }
    Ok(Footprint::from_offsets(offsets))
}

/// Protected cells for one MUX and channel relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionMask {
    pub mask: BitGrid,
    pub radius_m: f64,
    pub relation: ChannelRelation,
}

/// Union of `footprint` stamped at every set cell of `receivers`.
pub fn dilate(receivers: &BitGrid, footprint: &Footprint) -> BitGrid {
    dilate_with(receivers, footprint, Execution::Sequential)
}

/// [`dilate`] with output rows processed under `exec`.
pub fn dilate_with(receivers: &BitGrid, footprint: &Footprint, exec: Execution) -> BitGrid {
    let (rows, cols) = receivers.shape();
    let mut out = BitGrid::new(rows, cols);
    if receivers.is_empty() || footprint.is_empty() || cols == 0 {
        return out;
    }
    let words = receivers.words_per_row();
    let spans = footprint.spans();

    // Run lengths needed, and for every occupied source row the running
    // dilations R_L[x] = OR src[x - t], t in 0..=L, for those lengths.
    let mut lengths: Vec<usize> = spans
        .values()
        .flatten()
        .map(|&(a, b)| (b - a) as usize)
        .collect();
    lengths.sort_unstable();
    lengths.dedup();
    let max_len = *lengths.last().unwrap_or(&0);

    let occupied: Vec<usize> = (0..rows).filter(|&r| !receivers.row_is_empty(r)).collect();
    let mut slot_of_row = vec![usize::MAX; rows];
    for (slot, &r) in occupied.iter().enumerate() {
        slot_of_row[r] = slot;
    }
    let runs: Vec<Vec<Vec<u64>>> = exec.map_range(occupied.len(), |slot| {
        // Padded on the right so bits pushed past the last column survive
        // until a negative shift brings them back.
        let mut acc = receivers.row_words(occupied[slot]).to_vec();
        acc.resize((cols + max_len).div_ceil(64), 0);
        let mut stored = Vec::with_capacity(lengths.len());
        let mut next = 0;
        for len in 0..=max_len {
            if len > 0 {
                let prev = acc.clone();
                or_shifted(&mut acc, &prev, 1);
            }
            if next < lengths.len() && lengths[next] == len {
                stored.push(acc.clone());
                next += 1;
            }
        }
        stored
    });
    let len_index = |len: usize| lengths.binary_search(&len).expect("length was collected");

    let spans: Vec<(i32, Vec<(i32, i32)>)> = spans.into_iter().collect();
    let mut data: Vec<&mut [u64]> = out.rows_mut().collect();
    exec.for_each_chunk_mut(&mut data, 1, |row_out, chunk| {
        let dst = &mut *chunk[0];
        for (dy, row_runs) in &spans {
            let src_row = row_out as i64 - *dy as i64;
            if src_row < 0 || src_row >= rows as i64 {
                continue;
            }
            let slot = slot_of_row[src_row as usize];
            if slot == usize::MAX {
                continue;
            }
            for &(a, b) in row_runs {
                let src = &runs[slot][len_index((b - a) as usize)];
                or_shifted(dst, src, a as i64);
            }
        }
        BitGrid::mask_tail(dst, cols);
    });
    debug_assert!(data.iter().all(|r| r.len() == words));
    out
}
