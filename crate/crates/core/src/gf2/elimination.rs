use super::matrix::{BitMatrix, WordVector, WORD_BITS};
use crate::error::{Error, Result};

/// Row-operation matrix `c` and pivot columns such that column
/// `pivots[i]` of `c * m` is the unit vector `e_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pseudoinverse {
    c: BitMatrix,
    pivots: Vec<usize>,
}

impl Pseudoinverse {
    pub fn c(&self) -> &BitMatrix {
        &self.c
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
}

/// GF(2) row rank of `m`. The input is left untouched.
pub fn rank(m: &BitMatrix) -> usize {
    let mut w = m.clone();
    let n = w.n_rows();
    let mut r = 0;
    for col in 0..w.n_cols() {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| w.get(i, col)) else {
            continue;
        };
        w.swap_rows(p, r);
        let from = col / WORD_BITS;
        for i in r + 1..n {
            if w.get(i, col) {
                w.xor_row_from(r, i, from);
            }
        }
        r += 1;
    }
    r
}

/// Gauss-Jordan elimination of `m`, with every row operation (including
/// exchanges) mirrored on an identity matrix to obtain `c`.
///
/// Pivots are taken in column order, lowest row index first.
pub fn pseudoinverse(m: &BitMatrix) -> Result<Pseudoinverse> {
    let n = m.n_rows();
    let mut w = m.clone();
    let mut c = BitMatrix::identity(n);
    let mut pivots = Vec::with_capacity(n);
    for col in 0..w.n_cols() {
        let r = pivots.len();
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| w.get(i, col)) else {
            continue;
        };
        w.swap_rows(p, r);
        c.swap_rows(p, r);
        // Remaining rows are zero left of `col`, so the pivot row is too.
        let from = col / WORD_BITS;
        for i in 0..n {
            if i != r && w.get(i, col) {
                w.xor_row_from(r, i, from);
                c.xor_row_from(r, i, 0);
            }
        }
        pivots.push(col);
    }
    if pivots.len() < n {
        return Err(Error::SingularMatrix);
    }
    Ok(Pseudoinverse { c, pivots })
}

/// Row-permuted LU factors `P M = L U` of a full-row-rank matrix, kept in
/// place: row `j` holds the multipliers of `L` at the pivot columns of
/// earlier rows and `U` from its own pivot column on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lu {
    w: BitMatrix,
    /// `perm[j]` is the original index of row `j`.
    perm: Vec<usize>,
    pivots: Vec<usize>,
}

impl Lu {
    /// Factors `m`; [`Error::SingularMatrix`] if its rows are dependent.
    pub fn new(m: &BitMatrix) -> Result<Self> {
        let n = m.n_rows();
        let n_cols = m.n_cols();
        let mut w = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        for col in 0..n_cols {
            let r = pivots.len();
            if r == n || n_cols - col < n - r {
                break;
            }
            let Some(p) = (r..n).find(|&i| w.get(i, col)) else {
                continue;
            };
            w.swap_rows(p, r);
            perm.swap(p, r);
            for i in r + 1..n {
                if w.get(i, col) {
                    w.xor_row_after(r, i, col);
                }
            }
            pivots.push(col);
        }
        if pivots.len() < n {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { w, perm, pivots })
    }

    /// Pivot column of each factored row, ascending.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `a` with `m * a = u`, zero off the pivot columns.
    pub fn solve(&self, u: &[u64]) -> Result<Vec<u64>> {
        let n = self.pivots.len();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: u.len(),
            });
        }
        // `pivot_pos[c]` is the row whose pivot is column `c`.
        let mut pivot_pos = vec![usize::MAX; self.w.n_cols()];
        for (j, &c) in self.pivots.iter().enumerate() {
            pivot_pos[c] = j;
        }
        let mut y = vec![0u64; n];
        for j in 0..n {
            let mut acc = u[self.perm[j]];
            for c in set_bits_before(self.w.row(j), self.pivots[j]) {
                acc ^= y[pivot_pos[c]];
            }
            y[j] = acc;
        }
        let mut a = vec![0u64; self.w.n_cols()];
        for j in (0..n).rev() {
            let p = self.pivots[j];
            let mut acc = y[j];
            for c in set_bits_after(self.w.row(j), p) {
                acc ^= a[c];
            }
            a[p] = acc;
        }
        Ok(a)
    }
}

fn set_bits_before(row: &[u64], col: usize) -> impl Iterator<Item = usize> + '_ {
    let last = col / WORD_BITS;
    row[..=last].iter().enumerate().flat_map(move |(w, &word)| {
        let word = if w == last { word & ((1u64 << (col % WORD_BITS)) - 1) } else { word };
        bits_of(word, w)
    })
}

fn set_bits_after(row: &[u64], col: usize) -> impl Iterator<Item = usize> + '_ {
    let first = col / WORD_BITS;
    row[first..].iter().enumerate().flat_map(move |(i, &word)| {
        let word = if i == 0 { word & ((!0u64 << (col % WORD_BITS)) << 1) } else { word };
        bits_of(word, first + i)
    })
}

fn bits_of(mut word: u64, w: usize) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (word != 0).then(|| {
            let b = word.trailing_zeros() as usize;
            word &= word - 1;
            w * WORD_BITS + b
        })
    })
}

/// Solves `m * a = u` by reading off the pivot-supported solution of
/// `(c m) a = c u`: `a[pivots[i]] = (c u)_i`, zero elsewhere.
pub fn solve_sparse(m: &BitMatrix, pinv: &Pseudoinverse, u: &WordVector) -> Result<WordVector> {
    if u.len() != m.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: m.n_rows(),
            actual: u.len(),
        });
    }
    if pinv.c.n_rows() != m.n_rows() || pinv.pivots.len() != m.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: m.n_rows(),
            actual: pinv.c.n_rows(),
        });
    }
    let u_prime = mat_vec_xor(&pinv.c, u)?;
    let mut a = vec![0u64; m.n_cols()];
    for (&b, &v) in pinv.pivots.iter().zip(u_prime.as_slice()) {
        a[b] = v;
    }
    WordVector::new(u.bits(), a)
}

/// Entry `i` of the result is the XOR of `a[j]` over the set bits `j` of row `i`.
pub fn mat_vec_xor(m: &BitMatrix, a: &WordVector) -> Result<WordVector> {
    if a.len() != m.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: m.n_cols(),
            actual: a.len(),
        });
    }
    let values = a.as_slice();
    let out = (0..m.n_rows())
        .map(|i| {
            let mut acc = 0u64;
            for (w, &word) in m.row(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    acc ^= values[w * WORD_BITS + bits.trailing_zeros() as usize];
                    bits &= bits - 1;
                }
            }
            acc
        })
        .collect();
    WordVector::new(a.bits(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook elimination over rows of `Vec<bool>`, kept deliberately
    /// separate from the word-packed code.
    fn naive_rank(rows: &[Vec<bool>]) -> usize {
        let mut rows: Vec<Vec<bool>> = rows.to_vec();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            if let Some(p) = (rank..rows.len()).find(|&i| rows[i][c]) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for row in rows.iter_mut().skip(rank + 1) {
                    if row[c] {
                        for (x, y) in row.iter_mut().zip(&pivot) {
                            *x ^= *y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    fn to_bools(m: &BitMatrix) -> Vec<Vec<bool>> {
        (0..m.n_rows())
            .map(|i| (0..m.n_cols()).map(|j| m.get(i, j)).collect())
            .collect()
    }

    fn random_weight_k(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> BitMatrix {
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|_| rand::seq::index::sample(rng, m, k).into_vec())
            .collect();
        BitMatrix::from_sparse_rows(&rows, m).unwrap()
    }

    fn check_pinv(m: &BitMatrix, p: &Pseudoinverse) {
        let cm = p.c().mul(m).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (i, &b) in p.pivots().iter().enumerate() {
            assert!(seen.insert(b), "pivot {b} repeated");
            let col = cm.column(b);
            for (r, &bit) in col.iter().enumerate() {
                assert_eq!(bit, r == i, "column {b} row {r}");
            }
        }
    }

    #[test]
    fn lu_matches_pseudoinverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut solved = 0;
        for _ in 0..200 {
            let (n, m) = (rng.gen_range(1..90), rng.gen_range(1..100));
            let mut mat = BitMatrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    mat.set(i, j, rng.gen_bool(0.3));
                }
            }
            match (Lu::new(&mat), pseudoinverse(&mat)) {
                (Ok(lu), Ok(p)) => {
                    assert_eq!(lu.pivots(), p.pivots());
                    let u = WordVector::new(64, (0..n).map(|_| rng.gen()).collect()).unwrap();
                    let a = WordVector::new(64, lu.solve(u.as_slice()).unwrap()).unwrap();
                    assert_eq!(a, solve_sparse(&mat, &p, &u).unwrap());
                    solved += 1;
                }
                (Err(Error::SingularMatrix), Err(Error::SingularMatrix)) => {}
                (a, b) => panic!("disagree: {:?} {:?}", a.is_ok(), b.is_ok()),
            }
        }
        assert!(solved > 20);
    }

    #[test]
    fn rank_identity_and_duplicates() {
        assert_eq!(rank(&BitMatrix::identity(3)), 3);
        let dup = BitMatrix::from_bits(&[[1u8, 0, 1], [1, 0, 1]]).unwrap();
        assert_eq!(rank(&dup), 1);
        assert_eq!(rank(&BitMatrix::zeros(0, 5)), 0);
    }

    #[test]
    fn rank_weight3_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_weight_k(&mut rng, 100, 120, 3);
        assert_eq!(rank(&m), naive_rank(&to_bools(&m)));
    }

    #[test]
    fn rank_matches_naive_on_many_small_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(0..=64);
            let c = rng.gen_range(1..=64);
            let density = rng.gen_range(0.05..0.6);
            let mut m = BitMatrix::zeros(n, c);
            for i in 0..n {
                for j in 0..c {
                    if rng.gen_bool(density) {
                        m.set(i, j, true);
                    }
                }
            }
            assert_eq!(rank(&m), naive_rank(&to_bools(&m)));
        }
    }

    #[test]
    fn rank_invariant_under_row_operations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut m = random_weight_k(&mut rng, 40, 48, 3);
            let before = rank(&m);
            for _ in 0..30 {
                let a = rng.gen_range(0..40);
                let b = rng.gen_range(0..40);
                if rng.gen_bool(0.5) {
                    m.swap_rows(a, b);
                } else if a != b {
                    m.xor_row_into(a, b);
                }
            }
            assert_eq!(rank(&m), before);
        }
    }

    #[test]
    fn pseudoinverse_of_identity() {
        let p = pseudoinverse(&BitMatrix::identity(5)).unwrap();
        assert_eq!(p.c(), &BitMatrix::identity(5));
        assert_eq!(p.pivots(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn pseudoinverse_upper_triangular() {
        let m = BitMatrix::from_bits(&[[1u8, 1], [0, 1]]).unwrap();
        let p = pseudoinverse(&m).unwrap();
        check_pinv(&m, &p);
    }

    #[test]
    fn zero_row_is_singular() {
        let m = BitMatrix::from_bits(&[[1u8, 1, 0], [0, 0, 0]]).unwrap();
        assert_eq!(pseudoinverse(&m), Err(Error::SingularMatrix));
    }

    #[test]
    fn pseudoinverse_needs_row_exchange() {
        let m = BitMatrix::from_bits(&[[0u8, 1, 1], [1, 0, 1], [1, 1, 1]]).unwrap();
        let p = pseudoinverse(&m).unwrap();
        check_pinv(&m, &p);
    }

    #[test]
    fn random_pseudoinverse_and_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut solved = 0;
        while solved < 20 {
            let m = random_weight_k(&mut rng, 50, 60, 3);
            let Ok(p) = pseudoinverse(&m) else {
                assert!(rank(&m) < 50);
                continue;
            };
            check_pinv(&m, &p);
            for bits in [1u32, 8, 16, 32] {
                for _ in 0..5 {
                    let u: Vec<u64> = (0..50).map(|_| rng.gen::<u64>() & crate::gf2::value_mask(bits)).collect();
                    let u = WordVector::new(bits, u).unwrap();
                    let a = solve_sparse(&m, &p, &u).unwrap();
                    assert_eq!(mat_vec_xor(&m, &a).unwrap(), u);
                    for (j, &v) in a.as_slice().iter().enumerate() {
                        if !p.pivots().contains(&j) {
                            assert_eq!(v, 0);
                        }
                    }
                }
            }
            solved += 1;
        }
    }

    #[test]
    fn solve_identity_and_homogeneous() {
        let m = BitMatrix::identity(4);
        let p = pseudoinverse(&m).unwrap();
        let u = WordVector::new(8, vec![1, 2, 3, 255]).unwrap();
        assert_eq!(solve_sparse(&m, &p, &u).unwrap(), u);
        let z = WordVector::zeros(8, 4);
        assert_eq!(solve_sparse(&m, &p, &z).unwrap(), z);
        let short = WordVector::zeros(8, 3);
        assert!(matches!(
            solve_sparse(&m, &p, &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mat_vec_definition() {
        let m = BitMatrix::from_bits(&[[1u8, 0, 1]]).unwrap();
        let a = WordVector::new(8, vec![0x0f, 0x33, 0xf0]).unwrap();
        assert_eq!(mat_vec_xor(&m, &a).unwrap().as_slice(), &[0xff]);
        let z = BitMatrix::zeros(3, 3);
        assert_eq!(mat_vec_xor(&z, &a).unwrap().as_slice(), &[0, 0, 0]);
        assert!(mat_vec_xor(&m, &WordVector::zeros(8, 2)).is_err());
    }

    #[test]
    fn mat_vec_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_weight_k(&mut rng, 70, 130, 5);
        let a: Vec<u64> = (0..130).map(|_| rng.gen::<u16>() as u64).collect();
        let got = mat_vec_xor(&m, &WordVector::new(16, a.clone()).unwrap()).unwrap();
        for i in 0..70 {
            let mut acc = 0;
            for (j, &aj) in a.iter().enumerate() {
                if m.get(i, j) {
                    acc ^= aj;
                }
            }
            assert_eq!(got.as_slice()[i], acc);
        }
    }
}
