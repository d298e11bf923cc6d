//! Counter-based random variates for reproducible parallel sampling.
//!
//! A variate is a pure function of `(master seed, realization, cell,
//! household)`: the seed keys a ChaCha8 generator, the realization selects
//! its stream and `(cell, household)` its word position. Any worker can
//! therefore draw any household's variates without coordination, and the
//! result does not depend on evaluation order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words reserved per household. Three are consumed.
const WORDS_PER_HOUSEHOLD: u128 = 4;
/// Households addressable per cell.
const HOUSEHOLD_BITS: u32 = 32;

/// Uniform variates assigned to one household.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdVariates {
    pub coverage: f64,
    pub subscription: f64,
    pub watching: f64,
}

/// Variate source for one realization.
#[derive(Clone)]
pub struct RealizationStream {
    rng: ChaCha8Rng,
}

impl RealizationStream {
    pub fn new(master_seed: u64, realization: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(realization);
        Self { rng }
    }

    /// Iterator over the variates of households `0..` in `cell`.
    pub fn cell(&mut self, cell: u64) -> CellVariates<'_> {
        self.rng
            .set_word_pos(((cell as u128) << HOUSEHOLD_BITS) * WORDS_PER_HOUSEHOLD);
        CellVariates { rng: &mut self.rng }
    }
}

pub struct CellVariates<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Iterator for CellVariates<'_> {
    type Item = HouseholdVariates;

    fn next(&mut self) -> Option<HouseholdVariates> {
        let coverage = unit(self.rng.next_u32());
        let subscription = unit(self.rng.next_u32());
        let watching = unit(self.rng.next_u32());
        let _ = self.rng.next_u32();
        Some(HouseholdVariates {
            coverage,
            subscription,
            watching,
        })
    }
}

/// Maps a 32-bit word to the open interval (0, 1).
#[inline]
fn unit(word: u32) -> f64 {
    (word as f64 + 0.5) * (1.0 / 4_294_967_296.0)
}
