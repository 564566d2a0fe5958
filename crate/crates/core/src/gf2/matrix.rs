use std::fmt;

use crate::error::{Error, Result};

/// Number of bits per storage word.
pub const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Dense GF(2) matrix with word-packed rows.
///
/// Bit `j` of row `i` lives in word `j / 64` of that row at bit position
/// `j % 64`. Padding bits past `n_cols` are always zero.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        let stride = words_for(n_cols);
        Self {
            n_rows,
            n_cols,
            stride,
            data: vec![0; n_rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix whose row `i` has ones exactly at `rows[i]`.
    pub fn from_sparse_rows<R: AsRef<[usize]>>(rows: &[R], n_cols: usize) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            for &j in row.as_ref() {
                if j >= n_cols {
                    return Err(Error::IndexOutOfRange { index: j, len: n_cols });
                }
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from rows of 0/1 bytes.
    pub fn from_bits<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Words per row.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        (self.data[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        let w = &mut self.data[i * self.stride + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// Column indices of the set bits in row `i`, ascending.
    pub fn row_ones(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.row(i).iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                out.push(w * WORD_BITS + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn column(&self, j: usize) -> Vec<bool> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * self.stride);
        head[lo * self.stride..(lo + 1) * self.stride].swap_with_slice(&mut tail[..self.stride]);
    }

    /// `row[dst] ^= row[src]`, restricted to words `from_word..`.
    #[inline]
    pub(crate) fn xor_row_from(&mut self, src: usize, dst: usize, from_word: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (src_row, dst_row) = if src < dst {
            let (head, tail) = self.data.split_at_mut(dst * s);
            (&head[src * s..(src + 1) * s], &mut tail[..s])
        } else {
            let (head, tail) = self.data.split_at_mut(src * s);
            (&tail[..s] as &[u64], &mut head[dst * s..(dst + 1) * s])
        };
        for (d, v) in dst_row[from_word..].iter_mut().zip(&src_row[from_word..]) {
            *d ^= *v;
        }
    }

    /// Row `dst` ^= row `src`, on the columns after `col` only.
    #[inline]
    pub(crate) fn xor_row_after(&mut self, src: usize, dst: usize, col: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (src_row, dst_row) = if src < dst {
            let (head, tail) = self.data.split_at_mut(dst * s);
            (&head[src * s..(src + 1) * s], &mut tail[..s])
        } else {
            let (head, tail) = self.data.split_at_mut(src * s);
            (&tail[..s] as &[u64], &mut head[dst * s..(dst + 1) * s])
        };
        let from = col / WORD_BITS;
        dst_row[from] ^= src_row[from] & ((!0u64 << (col % WORD_BITS)) << 1);
        for (d, v) in dst_row[from + 1..].iter_mut().zip(&src_row[from + 1..]) {
            *d ^= *v;
        }
    }

    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        self.xor_row_from(src, dst, 0);
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                actual: other.n_rows,
            });
        }
        let mut out = BitMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for j in self.row_ones(i) {
                let src = other.row(j);
                for (d, v) in out.row_mut(i).iter_mut().zip(src) {
                    *d ^= *v;
                }
            }
        }
        Ok(out)
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.n_rows, cols.len());
        for i in 0..self.n_rows {
            for (c, &j) in cols.iter().enumerate() {
                if self.get(i, j) {
                    out.set(i, c, true);
                }
            }
        }
        out
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.n_rows, self.n_cols)?;
        for i in 0..self.n_rows.min(32) {
            let line: String = (0..self.n_cols.min(96))
                .map(|j| if self.get(i, j) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// A vector of `bits`-wide values, one per machine word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVector {
    bits: u32,
    entries: Vec<u64>,
}

impl WordVector {
    pub fn new(bits: u32, entries: Vec<u64>) -> Result<Self> {
        if bits > 64 {
            return Err(Error::InvalidParameter(format!("entry width {bits} > 64")));
        }
        let mask = value_mask(bits);
        if let Some(&bad) = entries.iter().find(|&&v| v & !mask != 0) {
            return Err(Error::ValueTooWide { value: bad, bits });
        }
        Ok(Self { bits, entries })
    }

    pub fn zeros(bits: u32, len: usize) -> Self {
        Self {
            bits,
            entries: vec![0; len],
        }
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[u64] {
        &self.entries
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.entries
    }
}

/// All-ones mask for the low `bits` bits.
#[inline]
pub fn value_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}
