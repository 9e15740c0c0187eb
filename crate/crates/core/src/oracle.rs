//! Exhaustive modularity maximisation for small graphs.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{modularity, Partition, WeightedGraph};

/// Largest graph accepted by [`brute_force_best_partition`] (Bell(10) = 115975).
pub const MAX_BRUTE_FORCE_NODES: usize = 10;

/// Visits every set partition of `n` nodes as a restricted growth string,
/// in lexicographic order.
pub fn for_each_set_partition(n: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut a = alloc::vec![0usize; n];
    // max label used in a[..=i]
    let mut prefix_max = alloc::vec![0usize; n];
    loop {
        f(&a);
        // rightmost position that can be incremented
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] <= prefix_max[i - 1] {
                break;
            }
            i -= 1;
        }
        a[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(a[i]);
        for j in (i + 1)..n {
            a[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

/// Highest-modularity partition; ties keep the lexicographically smallest
/// canonical labeling.
pub fn brute_force_best_partition(g: &WeightedGraph, resolution: f64) -> Result<Partition> {
    let n = g.len();
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::TooLarge {
            n,
            max: MAX_BRUTE_FORCE_NODES,
        });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut failure = None;
    for_each_set_partition(n, |a| match modularity(g, a, resolution) {
        Ok(q) => {
            if best.as_ref().is_none_or(|(bq, _)| q > *bq + 1e-12) {
                best = Some((q, a.to_vec()));
            }
        }
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, assignment) = best.ok_or(Error::InvalidGraph("no nodes".into()))?;
    Partition::new(g, &assignment, resolution)
}
