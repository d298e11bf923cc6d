//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's link-budget, propagation or
//! dilation code: the formulas are restated from first principles and the
//! protection test is a plain per-cell, per-receiver distance check.

#![allow(dead_code)]

use grayspace::engine::PreparedScenario;
use grayspace::griddata::HouseholdGrid;
use grayspace::scenario::ReceiverRealization;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// EIRP in dBm plus the 104.8 dB conversion to dBµV/m at 1 m.
pub fn field_strength_1m(eirp_mw: f64) -> f64 {
    10.0 * eirp_mw.log10() + 104.8
}

/// Free-space field strength in dBµV/m at `d_m` metres from an isotropic
/// source of `eirp_mw`: E = sqrt(30 P) / d.
pub fn free_space_field(eirp_mw: f64, d_m: f64) -> f64 {
    let e_v_per_m = (30.0 * eirp_mw / 1000.0).sqrt() / d_m;
    20.0 * (e_v_per_m * 1e6).log10()
}

/// Okumura-Hata loss for small/medium cities, with the usual suburban
/// correction when `suburban` is set.
pub fn hata_loss(f_mhz: f64, hb: f64, hm: f64, d_km: f64, suburban: bool) -> f64 {
    let lf = f_mhz.log10();
    let a_hm = (1.1 * lf - 0.7) * hm - (1.56 * lf - 0.8);
    let urban = 69.55 + 26.16 * lf - 13.82 * hb.log10() - a_hm
        + (44.9 - 6.55 * hb.log10()) * d_km.log10();
    if suburban {
        urban - 2.0 * (f_mhz / 28.0).log10().powi(2) - 5.4
    } else {
        urban
    }
}

/// Distance in km at which `hata_loss` reaches `loss_db`, by bisection.
pub fn hata_distance_km(f_mhz: f64, hb: f64, hm: f64, loss_db: f64, suburban: bool) -> f64 {
    let (mut lo, mut hi) = (1e-6f64, 1e4f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if hata_loss(f_mhz, hb, hm, mid, suburban) < loss_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Smallest multiple of `res` not below `d`, tolerating float noise.
pub fn quantize(d: f64, res: f64) -> f64 {
    let k = d / res;
    let r = k.round();
    if (k - r).abs() < 1e-9 {
        r * res
    } else {
        k.ceil() * res
    }
}

/// Squared minimum distance in m² between two grid squares `(dx, dy)`
/// cells apart. Exact in floating point for grid-sized inputs.
pub fn square_gap_sq_m(dx: i64, dy: i64, res: f64) -> f64 {
    let g = |k: i64| (k.abs() - 1).max(0) as f64 * res;
    g(dx) * g(dx) + g(dy) * g(dy)
}

/// Channel plan restated: used channels, and for each adjacent channel the
/// indices of the used channels next to it.
pub struct OraclePlan {
    pub used: Vec<u32>,
    pub adjacent: Vec<(u32, Vec<usize>)>,
}

impl OraclePlan {
    pub fn new(first: u32, n_channels: u32, used: &[u32]) -> Self {
        let last = first + n_channels - 1;
        let mut adjacent: Vec<(u32, Vec<usize>)> = Vec::new();
        for ch in first..=last {
            if used.contains(&ch) {
                continue;
            }
            let parents: Vec<usize> = used
                .iter()
                .enumerate()
                .filter(|(_, &u)| u + 1 == ch || ch + 1 == u)
                .map(|(i, _)| i)
                .collect();
            if !parents.is_empty() {
                adjacent.push((ch, parents));
            }
        }
        Self { used: used.to_vec(), adjacent }
    }
}

/// Free channels per cell for one realization, by brute force.
pub fn naive_channels(
    grid: &HouseholdGrid,
    realization: &ReceiverRealization,
    plan: &OraclePlan,
    co_radius_m: f64,
    adj_radius_m: f64,
) -> Vec<Option<usize>> {
    let (rows, cols) = grid.shape();
    let res = grid.resolution_m();
    let receivers: Vec<(i64, i64, usize)> = (0..rows * cols)
        .filter(|&i| !realization.cell(i).is_empty())
        .map(|i| ((i % cols) as i64, (i / cols) as i64, i))
        .collect();
    (0..rows * cols)
        .map(|i| {
            if !grid.valid()[i] {
                return None;
            }
            let (x, y) = ((i % cols) as i64, (i / cols) as i64);
            let protected = |m: usize, radius: f64| {
                receivers.iter().any(|&(rx, ry, ri)| {
                    realization.cell(ri).contains(m) && square_gap_sq_m(x - rx, y - ry, res) < radius * radius
                })
            };
            let co = (0..plan.used.len()).filter(|&m| !protected(m, co_radius_m)).count();
            let adj = plan
                .adjacent
                .iter()
                .filter(|(_, parents)| parents.iter().all(|&m| !protected(m, adj_radius_m)))
                .count();
            Some(co + adj)
        })
        .collect()
}

/// Engine channel counts with invalid cells as `None`.
pub fn engine_channels(p: &PreparedScenario<'_>, grid: &HouseholdGrid, r: u64) -> Vec<Option<usize>> {
    p.realization_channels(r)
        .into_iter()
        .zip(grid.valid())
        .map(|(c, &v)| v.then_some(c as usize))
        .collect()
}

/// Deterministic generator for building random test scenarios.
pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
