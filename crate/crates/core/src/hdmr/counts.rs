use crate::math::binomial;
use crate::sparsegrid::{count_nodes, node_count};

/// Model evaluations of a construction.
///
/// `conventional` counts the anchor run separately and every grid in full,
/// so shared centre nodes are counted once per grid. `unique` is the number
/// of distinct points actually evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ledger {
    pub conventional: u64,
    pub unique: u64,
}

/// Collocation counts of the four constructions for one setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexityCounts {
    /// Smolyak grid over all `N` dimensions.
    pub full: u64,
    /// Order-`q` Cut-HDMR over all `N` dimensions.
    pub truncated: u64,
    pub hybrid: u64,
    pub adaptive: u64,
}

fn truncated_sum(n: usize, q: usize, level: u32) -> u64 {
    (1..=q.min(n)).fold(0u64, |acc, s| {
        let c = binomial(n as u64, s as u64).unwrap_or(u64::MAX);
        acc.saturating_add(c.saturating_mul(count_nodes(s, level)))
    })
}

pub fn complexity_counts(n: usize, j: usize, level: u32, q: usize) -> ComplexityCounts {
    complexity_counts_with(n, j, level, level, q)
}

/// As [`complexity_counts`] with a separate level for the inactive lines.
pub fn complexity_counts_with(n: usize, j: usize, level: u32, level_inactive: u32, q: usize) -> ComplexityCounts {
    let lines = (n.saturating_sub(j) as u64).saturating_mul(node_count(level_inactive) as u64);
    ComplexityCounts {
        full: count_nodes(n, level),
        truncated: truncated_sum(n, q, level),
        hybrid: count_nodes(j, level).saturating_add(lines).saturating_add(1),
        adaptive: truncated_sum(j, q, level).saturating_add(lines).saturating_add(1),
    }
}
