//! Linear algebra over GF(2).
//!
//! [`BitMatrix`] is a dense word-packed matrix with the classic
//! elimination routines: [`rank`], [`pseudoinverse`] (Gauss-Jordan with the
//! row operations recorded in a matrix `C`), [`solve_sparse`] and
//! [`mat_vec_xor`]. Values attached to rows are `r`-bit strings held one per
//! `u64`; addition is XOR.
//!
//! [`SparseRows`] and [`Factorization`] handle the large, very sparse
//! systems produced by hashing keys to `k` table positions. Rows owning a
//! column no other row touches are split off first; the remaining core is
//! eliminated densely with [`pseudoinverse`].

mod elimination;
mod matrix;
mod structured;

pub use elimination::{mat_vec_xor, pseudoinverse, rank, solve_sparse, Lu, Pseudoinverse};
pub use matrix::{value_mask, BitMatrix, WordVector, WORD_BITS};
pub use structured::{sparse_rank, Factorization, SparseRows};
