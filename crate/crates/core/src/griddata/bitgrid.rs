/// Row-major boolean raster packed into 64-bit words.
///
/// Bits beyond `cols` in the last word of every row are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitGrid {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitGrid {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BitGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    g.set(r, c, true);
                }
            }
        }
        g
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub(crate) fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        let w = self.data[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols, "({row}, {col}) out of bounds");
        let w = &mut self.data[row * self.words_per_row + col / 64];
        let bit = 1u64 << (col % 64);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Linear (row-major) cell index access.
    #[inline]
    pub fn get_index(&self, index: usize) -> bool {
        self.get(index / self.cols, index % self.cols)
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.data[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, u64> {
        self.data.chunks_mut(self.words_per_row.max(1))
    }

    pub fn row_is_empty(&self, row: usize) -> bool {
        self.row_words(row).iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &BitGrid) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a |= *b;
        }
    }

    pub fn is_subset_of(&self, other: &BitGrid) -> bool {
        self.shape() == other.shape()
            && self.data.iter().zip(&other.data).all(|(a, b)| a & !b == 0)
    }

    /// Iterates `(row, col)` of every set cell in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| {
            self.row_words(r)
                .iter()
                .enumerate()
                .flat_map(move |(wi, &w)| BitIter(w).map(move |b| (r, wi * 64 + b)))
        })
    }

    /// Clears padding bits past `cols` in `row`.
    pub(crate) fn mask_tail(words: &mut [u64], cols: usize) {
        let rem = cols % 64;
        if rem != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// ORs `src` shifted by `shift` bit positions (positive = towards higher columns) into `dst`.
/// `src` may be longer than `dst`; bits falling outside `dst` are dropped.
pub(crate) fn or_shifted(dst: &mut [u64], src: &[u64], shift: i64) {
    let n = dst.len() as i64;
    let m = src.len() as i64;
    let ws = shift.div_euclid(64);
    let bs = shift.rem_euclid(64) as u32;
    for i in 0..n {
        let j = i - ws;
        let mut w = 0u64;
        if (0..m).contains(&j) {
            w |= src[j as usize] << bs;
        }
        if bs > 0 && (0..m).contains(&(j - 1)) {
            w |= src[(j - 1) as usize] >> (64 - bs);
        }
        dst[i as usize] |= w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_iter() {
        let mut g = BitGrid::new(3, 130);
        g.set(0, 0, true);
        g.set(1, 64, true);
        g.set(2, 129, true);
        assert_eq!(g.count_ones(), 3);
        assert_eq!(g.iter_ones().collect::<Vec<_>>(), vec![(0, 0), (1, 64), (2, 129)]);
        g.set(1, 64, false);
        assert!(!g.get(1, 64));
        assert!(g.row_is_empty(1));
    }

    #[test]
    fn shifting_matches_bitwise_reference() {
        let cols: usize = 150;
        let src_bits: Vec<usize> = vec![0, 1, 63, 64, 65, 100, 127, 128, 149];
        let mut src = vec![0u64; cols.div_ceil(64)];
        for &b in &src_bits {
            src[b / 64] |= 1 << (b % 64);
        }
        for shift in [-150i64, -70, -64, -3, 0, 1, 63, 64, 65, 149, 200] {
            let mut dst = vec![0u64; src.len()];
            or_shifted(&mut dst, &src, shift);
            BitGrid::mask_tail(&mut dst, cols);
            let got: Vec<usize> = (0..cols).filter(|&b| (dst[b / 64] >> (b % 64)) & 1 == 1).collect();
            let want: Vec<usize> = src_bits
                .iter()
                .map(|&b| b as i64 + shift)
                .filter(|&b| (0..cols as i64).contains(&b))
                .map(|b| b as usize)
                .collect();
            assert_eq!(got, want, "shift {shift}");
        }
    }
}
