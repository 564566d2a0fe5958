//! Static functions, filters and perfect hashing from sparse random
//! linear systems over GF(2).

pub mod blocked;
pub mod compact;
pub mod container;
pub mod error;
pub mod filter;
pub mod gf2;
pub mod hashing;
mod input;
pub mod phf;
pub mod rank;
pub mod retrieval;
pub mod threshold;

pub use blocked::{BlockedParams, BlockedRetrieval};
pub use compact::{CompactParams, CompactRetrieval};
pub use container::{Container, Kind, Persist};
pub use error::{Error, Result};
pub use filter::{Backend, BackendKind, BackendParams, BloomierFilter, MembershipFilter};
pub use phf::{MinimalPerfectHash, PerfectHash, PhfParams};
pub use rank::RankBitvector;
pub use retrieval::{CompressedRetrieval, RetrievalParams, RetrievalStructure};
