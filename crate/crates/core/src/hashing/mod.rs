//! Seeded hash functions standing in for fully random ones.
//!
//! Every construction draws its functions from a [`SeededHasher`] family
//! keyed by a master seed; retries move to a fresh generation via
//! [`generation_seed`]. On top of that sit the distinct `k`-subset
//! generator, the conditioned binomial sampler used for variable row
//! weights, and the split-and-share provider.

mod binomial;
mod kset;
mod seeded;
mod split_share;

pub use binomial::{
    build_binomial_table, cooper_parameters, sample_conditioned, ConditionedBinomialTable, FIXED_ONE,
};
pub use kset::{distinct_k_set, distinct_k_set_into, for_each_distinct};
pub use seeded::{generation_seed, mix64, reduce, HashSource, SeededFamily, SeededHasher};
pub use split_share::{ChunkSource, SplitShareGeometry, SplitShareTables, SPLIT_SHARE_RETRIES};
