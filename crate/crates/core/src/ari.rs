//! Adjusted Rand index between two partitions of the same node set.

use alloc::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Partition;

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// ARI from the pair-counting contingency table. Nodes are matched by name,
/// so the two partitions may list them in different orders.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    let q_aligned = q.aligned_to(p.nodes())?;
    ari_from_labels(p.assignment(), &q_aligned)
}

/// ARI between two label vectors over the same nodes.
pub fn ari_from_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::NodeSetMismatch);
    }
    if a.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sum_rows * sum_cols / total } else { 0.0 };
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        // both partitions are all-singletons or both a single block
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}
