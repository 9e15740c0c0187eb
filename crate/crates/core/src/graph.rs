//! Weighted undirected graphs, partitions and modularity.
//!
//! Adjacency is stored dense. A diagonal entry holds *twice* the self-loop
//! weight, so that a self-loop of weight `s` adds `2s` to the node degree and
//! to `2m`. With this convention collapsing a community into one node keeps
//! modularity unchanged.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    adj: Vec<f64>,
    degrees: Vec<f64>,
    two_m: f64,
}

impl WeightedGraph {
    /// `weights` is a symmetric n x n matrix; its diagonal holds self-loop
    /// weights.
    pub fn new(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGraph("no nodes".into()));
        }
        if weights.len() != n * n {
            return Err(Error::InvalidGraph(alloc::format!(
                "{} weights for {} nodes",
                weights.len(),
                n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if !w.is_finite() {
                    return Err(Error::InvalidGraph("non-finite weight".into()));
                }
                if w < 0.0 {
                    return Err(Error::NegativeWeight { i, j, value: w });
                }
                if w != weights[j * n + i] {
                    return Err(Error::InvalidGraph(alloc::format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut adj = weights.to_vec();
        for i in 0..n {
            adj[i * n + i] *= 2.0;
        }
        Self::from_adjacency(labels, adj)
    }

    /// `adj` already carries doubled diagonal entries.
    pub(crate) fn from_adjacency(labels: Vec<String>, adj: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        let degrees: Vec<f64> = (0..n).map(|i| adj[i * n..(i + 1) * n].iter().sum()).collect();
        let two_m: f64 = degrees.iter().sum();
        if !(two_m > 0.0) {
            return Err(Error::AllZeroGraph);
        }
        Ok(Self {
            labels,
            adj,
            degrees,
            two_m,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Adjacency entry; diagonal entries are twice the self-loop weight.
    pub fn adjacency(&self, i: usize, j: usize) -> f64 {
        self.adj[i * self.len() + j]
    }

    pub(crate) fn adjacency_row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.adj[i * n..(i + 1) * n]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Sum of all adjacency entries.
    pub fn total_weight_2m(&self) -> f64 {
        self.two_m
    }

    /// Collapses each community into a super-node: internal weight becomes a
    /// self-loop, inter-community weights are summed. `assignment` must use
    /// contiguous labels `0..c`.
    pub fn aggregate(&self, assignment: &[usize]) -> Result<WeightedGraph> {
        let n = self.len();
        if assignment.len() != n {
            return Err(Error::UncoveredNode {
                expected: n,
                got: assignment.len(),
            });
        }
        let c = assignment.iter().max().map_or(0, |m| m + 1);
        let mut adj = alloc::vec![0.0; c * c];
        for i in 0..n {
            let ci = assignment[i];
            for j in 0..n {
                adj[ci * c + assignment[j]] += self.adj[i * n + j];
            }
        }
        let labels = (0..c).map(|k| k.to_string()).collect();
        Self::from_adjacency(labels, adj)
    }
}

/// Outcome of building a graph from a similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub graph: WeightedGraph,
    /// Negative correlations replaced by 0.
    pub clamped: usize,
}

/// Uses correlations as edge weights, dropping the diagonal.
pub fn from_similarity(m: &SimilarityMatrix, clamp_negative: bool) -> Result<SimilarityGraph> {
    let p = m.len();
    let mut w = alloc::vec![0.0; p * p];
    let mut clamped = 0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let r = m.get(i, j);
            if r < 0.0 {
                if !clamp_negative {
                    return Err(Error::NegativeWeight { i, j, value: r });
                }
                if i < j {
                    clamped += 1;
                }
            } else {
                w[i * p + j] = r;
            }
        }
    }
    let labels = m.pipelines().iter().map(|id| id.to_string()).collect();
    Ok(SimilarityGraph {
        graph: WeightedGraph::new(labels, &w)?,
        clamped,
    })
}

/// Relabels communities 0..c by order of first appearance.
pub fn canonical_labels(assignment: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    assignment
        .iter()
        .map(|&a| match map.iter().find(|(from, _)| *from == a) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((a, to));
                to
            }
        })
        .collect()
}

/// Modularity `Q = 1/2m * sum_c [ in_c - gamma * tot_c^2 / 2m ]`, where
/// `in_c` sums adjacency entries inside community c and `tot_c` sums the
/// degrees of its nodes.
pub fn modularity(g: &WeightedGraph, assignment: &[usize], gamma: f64) -> Result<f64> {
    let n = g.len();
    if assignment.len() != n {
        return Err(Error::UncoveredNode {
            expected: n,
            got: assignment.len(),
        });
    }
    let c = assignment.iter().max().map_or(0, |m| m + 1);
    let mut inside = alloc::vec![0.0; c];
    let mut tot = alloc::vec![0.0; c];
    for i in 0..n {
        let ci = assignment[i];
        let row = g.adjacency_row(i);
        inside[ci] += (0..n).filter(|&j| assignment[j] == ci).map(|j| row[j]).sum::<f64>();
        tot[ci] += g.degree(i);
    }
    let two_m = g.total_weight_2m();
    let q: f64 = inside
        .iter()
        .zip(&tot)
        .map(|(&win, &t)| win - gamma * t * (t / two_m))
        .sum();
    Ok(q / two_m)
}

/// Assignment of every node to a community.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<String>,
    assignment: Vec<usize>,
    modularity: f64,
    resolution: f64,
}

impl Partition {
    /// Canonically relabels `assignment` and scores it on `g`.
    pub fn new(g: &WeightedGraph, assignment: &[usize], resolution: f64) -> Result<Self> {
        let assignment = canonical_labels(assignment);
        let modularity = modularity(g, &assignment, resolution)?;
        Ok(Self {
            nodes: g.labels().to_vec(),
            assignment,
            modularity,
            resolution,
        })
    }

    /// A partition not tied to a graph (e.g. a planted ground truth).
    pub fn from_labels(nodes: Vec<String>, assignment: &[usize], modularity: f64, resolution: f64) -> Result<Self> {
        if nodes.len() != assignment.len() {
            return Err(Error::UncoveredNode {
                expected: nodes.len(),
                got: assignment.len(),
            });
        }
        Ok(Self {
            nodes,
            assignment: canonical_labels(assignment),
            modularity,
            resolution,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn n_communities(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Node indices per community, in label order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.n_communities()];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    /// Assignment re-expressed in the node order of `nodes`.
    pub fn aligned_to(&self, nodes: &[String]) -> Result<Vec<usize>> {
        if nodes.len() != self.nodes.len() {
            return Err(Error::NodeSetMismatch);
        }
        if nodes == self.nodes.as_slice() {
            return Ok(self.assignment.clone());
        }
        nodes
            .iter()
            .map(|name| {
                self.nodes
                    .iter()
                    .position(|n| n == name)
                    .map(|i| self.assignment[i])
                    .ok_or(Error::NodeSetMismatch)
            })
            .collect()
    }
}
