use serde::{Deserialize, Serialize};

/// Work limits shared by the refinement engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Cylinder nodes a single enumeration or measure refinement may visit.
    pub node_cap: u64,
    /// Pair evaluations allowed in the one-dimensional fattening bound.
    pub pair_cap: u64,
    /// Refinement depth for separation certificates.
    pub ssc_depth_cap: u32,
    /// Candidate sets the upper-bound optimizer may evaluate.
    pub candidate_cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            node_cap: 50_000_000,
            pair_cap: 100_000_000,
            ssc_depth_cap: 8,
            candidate_cap: 20_000,
        }
    }
}
