//! RReliefF ranking followed by sequential forward selection over the
//! ranked prefixes.

mod relief;
mod sfs;

pub use relief::{rank_order, rrelieff, rrelieff_weights, RankedFeatures, ReliefParams};
pub use sfs::{forward_prefix_search, sequential_forward_select, SearchStep, SelectionResult};
