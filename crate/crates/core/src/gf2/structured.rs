use std::collections::HashMap;

use super::elimination::{rank, Lu};
use super::matrix::BitMatrix;
use crate::error::{Error, Result};

/// Sparse 0/1 rows stored as column lists (CSR layout).
///
/// Column indices within a row must be distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseRows {
    n_cols: usize,
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl SparseRows {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            offsets: vec![0],
            cols: Vec::new(),
        }
    }

    pub fn with_capacity(n_cols: usize, rows: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            n_cols,
            offsets,
            cols: Vec::with_capacity(entries),
        }
    }

    pub fn push_row(&mut self, cols: &[usize]) {
        for &c in cols {
            debug_assert!(c < self.n_cols);
            self.cols.push(c as u32);
        }
        self.offsets.push(self.cols.len());
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.n_rows(), self.n_cols);
        for i in 0..self.n_rows() {
            for &j in self.row(i) {
                m.set(i, j as usize, true);
            }
        }
        m
    }

    /// XOR of `table[j]` over the columns of row `i`.
    #[inline]
    pub fn row_xor(&self, i: usize, table: &[u64]) -> u64 {
        self.row(i).iter().fold(0, |acc, &j| acc ^ table[j as usize])
    }
}

/// Result of repeatedly removing rows that own a column no other
/// remaining row touches.
struct Peeled {
    /// (row, private column) in removal order.
    order: Vec<(u32, u32)>,
    /// Rows left over, ascending.
    core_rows: Vec<u32>,
}

fn peel(rows: &SparseRows) -> Peeled {
    let n = rows.n_rows();
    let mut degree = vec![0u32; rows.n_cols()];
    let mut row_xor = vec![0u32; rows.n_cols()];
    for i in 0..n {
        for &j in rows.row(i) {
            degree[j as usize] += 1;
            row_xor[j as usize] ^= i as u32;
        }
    }
    let mut alive = vec![true; n];
    let mut stack: Vec<u32> = (0..rows.n_cols() as u32)
        .filter(|&j| degree[j as usize] == 1)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(j) = stack.pop() {
        if degree[j as usize] != 1 {
            continue;
        }
        let i = row_xor[j as usize];
        alive[i as usize] = false;
        order.push((i, j));
        for &c in rows.row(i as usize) {
            let c = c as usize;
            degree[c] -= 1;
            row_xor[c] ^= i;
            if degree[c] == 1 {
                stack.push(c as u32);
            }
        }
    }
    let core_rows = (0..n as u32).filter(|&i| alive[i as usize]).collect();
    Peeled { order, core_rows }
}

/// Dense submatrix spanned by `core_rows`, with columns renumbered.
fn core_matrix(rows: &SparseRows, core_rows: &[u32]) -> (BitMatrix, Vec<u32>) {
    let mut col_map: HashMap<u32, usize> = HashMap::new();
    let mut core_cols = Vec::new();
    for &i in core_rows {
        for &j in rows.row(i as usize) {
            col_map.entry(j).or_insert_with(|| {
                core_cols.push(j);
                core_cols.len() - 1
            });
        }
    }
    // Keep columns in ascending global order so pivot choice is canonical.
    core_cols.sort_unstable();
    for (c, &j) in core_cols.iter().enumerate() {
        col_map.insert(j, c);
    }
    let mut m = BitMatrix::zeros(core_rows.len(), core_cols.len());
    for (r, &i) in core_rows.iter().enumerate() {
        for &j in rows.row(i as usize) {
            m.set(r, col_map[&j], true);
        }
    }
    (m, core_cols)
}

/// Row rank of a sparse system; equals `rank(&rows.to_dense())`.
pub fn sparse_rank(rows: &SparseRows) -> usize {
    let peeled = peel(rows);
    if peeled.core_rows.is_empty() {
        return peeled.order.len();
    }
    let (core, _) = core_matrix(rows, &peeled.core_rows);
    peeled.order.len() + rank(&core)
}

/// Reusable solver for a full-row-rank sparse system `M a = u`.
///
/// Peeled rows are solved by back substitution in reverse removal order;
/// the core is solved with an in-place [`Lu`] factorization. The solution is supported
/// on [`Factorization::pivots`] only.
#[derive(Debug, Clone)]
pub struct Factorization {
    n_rows: usize,
    n_cols: usize,
    order: Vec<(u32, u32)>,
    core_rows: Vec<u32>,
    core_cols: Vec<u32>,
    core_lu: Option<Lu>,
}

impl Factorization {
    /// Fails with [`Error::SingularMatrix`] when the rows are dependent.
    pub fn new(rows: &SparseRows) -> Result<Self> {
        if rows.n_rows() > rows.n_cols() {
            return Err(Error::SingularMatrix);
        }
        let peeled = peel(rows);
        let (core_cols, core_lu) = if peeled.core_rows.is_empty() {
            (Vec::new(), None)
        } else {
            let (core, cols) = core_matrix(rows, &peeled.core_rows);
            (cols, Some(Lu::new(&core)?))
        };
        Ok(Self {
            n_rows: rows.n_rows(),
            n_cols: rows.n_cols(),
            order: peeled.order,
            core_rows: peeled.core_rows,
            core_cols,
            core_lu,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Rows that could not be peeled and went through dense elimination.
    pub fn core_size(&self) -> usize {
        self.core_rows.len()
    }

    /// Pivot columns, one per row, sorted ascending. The columns of `M`
    /// at these positions form a regular `n x n` submatrix.
    pub fn pivots(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.order.iter().map(|&(_, j)| j as usize).collect();
        if let Some(lu) = &self.core_lu {
            p.extend(lu.pivots().iter().map(|&c| self.core_cols[c] as usize));
        }
        p.sort_unstable();
        p
    }

    /// Returns `a` (length `n_cols`) with `M a = values`, zero off the pivots.
    pub fn solve(&self, rows: &SparseRows, values: &[u64]) -> Result<Vec<u64>> {
        if values.len() != self.n_rows || rows.n_rows() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: values.len(),
            });
        }
        let mut a = vec![0u64; self.n_cols];
        if let Some(lu) = &self.core_lu {
            let u: Vec<u64> = self.core_rows.iter().map(|&i| values[i as usize]).collect();
            for (c, &v) in lu.solve(&u)?.iter().enumerate() {
                a[self.core_cols[c] as usize] = v;
            }
        }
        for &(i, j) in self.order.iter().rev() {
            let others = rows.row_xor(i as usize, &a) ^ a[j as usize];
            a[j as usize] = values[i as usize] ^ others;
        }
        Ok(a)
    }
}
