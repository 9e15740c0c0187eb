//! Louvain modularity optimisation.
//!
//! Each level runs local moving to convergence, then collapses communities
//! into super-nodes and starts again on the smaller graph. The process stops
//! once a level makes no move.
//!
//! Local moving visits nodes in an order fixed per level by a seeded
//! Fisher-Yates shuffle. A node is taken out of its community and inserted
//! into whichever candidate (a neighbouring community, its own, or an empty
//! one) gives the largest gain; ties go to the lowest community label. The
//! move is applied only if it beats staying put by more than
//! [`MIN_GAIN`] in modularity.
//!
//! A single pass of the heuristic can stall in a poor local optimum, so
//! [`louvain`] runs [`DEFAULT_RESTARTS`] passes from one seeded stream and
//! keeps the first partition whose modularity is not beaten by more than
//! [`MIN_GAIN`]. Restart 0 is exactly the single-pass result.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{canonical_labels, Partition, WeightedGraph};

/// Smallest modularity improvement that counts as a move.
pub const MIN_GAIN: f64 = 1e-12;

/// Passes made by [`louvain`].
pub const DEFAULT_RESTARTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainConfig {
    pub resolution: f64,
    pub seed: u64,
    /// Number of passes; values below 1 are treated as 1.
    pub restarts: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

pub fn louvain(g: &WeightedGraph, resolution: f64, seed: u64) -> Result<Partition> {
    Louvain::new(LouvainConfig {
        resolution,
        seed,
        restarts: DEFAULT_RESTARTS,
    })
    .run(g)
}

#[derive(Debug, Clone)]
pub struct Louvain {
    config: LouvainConfig,
}

impl Louvain {
    pub fn new(config: LouvainConfig) -> Self {
        Self { config }
    }

    pub fn run(&self, g: &WeightedGraph) -> Result<Partition> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut best = self.pass(g, &mut rng)?;
        for _ in 1..self.config.restarts {
            let p = self.pass(g, &mut rng)?;
            if p.modularity() > best.modularity() + MIN_GAIN {
                best = p;
            }
        }
        Ok(best)
    }

    fn pass(&self, g: &WeightedGraph, rng: &mut ChaCha8Rng) -> Result<Partition> {
        let gamma = self.config.resolution;
        // community of every original node, in terms of current-level nodes
        let mut membership: Vec<usize> = (0..g.len()).collect();
        let mut level = g.clone();
        loop {
            let mut order: Vec<usize> = (0..level.len()).collect();
            order.shuffle(rng);
            let (local, moved) = local_moving(&level, gamma, &order);
            if !moved {
                break;
            }
            let local = canonical_labels(&local);
            for m in membership.iter_mut() {
                *m = local[*m];
            }
            level = level.aggregate(&local)?;
        }
        Partition::new(g, &membership, gamma)
    }
}

/// Phase 1 on one level. Returns the assignment and whether any node moved.
fn local_moving(g: &WeightedGraph, gamma: f64, order: &[usize]) -> (Vec<usize>, bool) {
    let n = g.len();
    let two_m = g.total_weight_2m();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = g.degrees().to_vec();
    let mut size: Vec<usize> = alloc::vec![1; n];
    let mut links = alloc::vec![0.0; n];
    let mut touched: Vec<usize> = Vec::with_capacity(n);
    let mut moved_any = false;

    loop {
        let mut moved = false;
        for &i in order {
            let k_i = g.degree(i);
            let old = community[i];
            let row = g.adjacency_row(i);

            touched.clear();
            for (j, &w) in row.iter().enumerate() {
                if j == i || w <= 0.0 {
                    continue;
                }
                let c = community[j];
                if links[c] == 0.0 && !touched.contains(&c) {
                    touched.push(c);
                }
                links[c] += w;
            }

            tot[old] -= k_i;
            size[old] -= 1;

            // gain of inserting i into c, up to the positive factor 2/2m
            let gain = |c: usize, links: &[f64], tot: &[f64]| links[c] - gamma * tot[c] * k_i / two_m;
            let stay = if size[old] == 0 { 0.0 } else { gain(old, &links, &tot) };

            let mut best = old;
            let mut best_gain = stay;
            let mut consider = |c: usize, value: f64| {
                if value > best_gain || (value == best_gain && c < best) {
                    best = c;
                    best_gain = value;
                }
            };
            for &c in &touched {
                consider(c, gain(c, &links, &tot));
            }
            if size[old] > 0 {
                if let Some(empty) = size.iter().position(|&s| s == 0) {
                    consider(empty, 0.0);
                }
            }

            let target = if best != old && 2.0 * (best_gain - stay) / two_m > MIN_GAIN {
                best
            } else {
                old
            };
            tot[target] += k_i;
            size[target] += 1;
            if target != old {
                community[i] = target;
                moved = true;
            }

            for &c in &touched {
                links[c] = 0.0;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    (community, moved_any)
}
