//! Cross-group stability of pipeline communities.
//!
//! Every group's similarity graph is partitioned on its own. Counting, for
//! each pipeline pair, the groups in which the two share a community gives
//! a co-occurrence matrix; that matrix is itself a graph whose Louvain
//! partition is the global community structure of a contrast.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ari::adjusted_rand_index;
use crate::error::{Error, Result};
use crate::graph::{from_similarity, Partition, WeightedGraph};
use crate::hash::fnv1a64;
use crate::louvain::louvain;
use crate::pipeline::{parse_pipeline_id, PipelineId};
use crate::similarity::SimilarityMatrix;

/// Per-group Louvain seed. Depends only on the run seed and the group's own
/// id, so adding or dropping groups leaves other groups untouched.
pub fn group_seed(seed: u64, group_id: &str) -> u64 {
    seed ^ fnv1a64(group_id.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    pub resolution: f64,
    pub seed: u64,
    pub clamp_negative: bool,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            seed: 0,
            clamp_negative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    pub partition: Partition,
    pub clamped: usize,
}

/// Builds the group graph from `m` and partitions it with the group's seed.
pub fn partition_group(m: &SimilarityMatrix, params: &PartitionParams) -> Result<GroupPartition> {
    let sg = from_similarity(m, params.clamp_negative)?;
    let partition = louvain(&sg.graph, params.resolution, group_seed(params.seed, m.group_id()))?;
    Ok(GroupPartition {
        partition,
        clamped: sg.clamped,
    })
}

/// Symmetric same-community counts over groups.
#[derive(Debug, Clone, PartialEq)]
pub struct CoOccurrenceMatrix {
    pipelines: Vec<PipelineId>,
    counts: Vec<u32>,
    n_groups: u32,
    contrast: String,
}

impl CoOccurrenceMatrix {
    pub fn new(pipelines: Vec<PipelineId>, counts: Vec<u32>, n_groups: u32, contrast: impl Into<String>) -> Result<Self> {
        let p = pipelines.len();
        if p == 0 || n_groups == 0 {
            return Err(Error::EmptyList);
        }
        if counts.len() != p * p {
            return Err(Error::InvalidConfig(alloc::format!("{} counts for {} pipelines", counts.len(), p)));
        }
        for i in 0..p {
            if counts[i * p + i] != n_groups {
                return Err(Error::InvalidConfig("co-occurrence diagonal must equal n_groups".into()));
            }
            for j in 0..p {
                let c = counts[i * p + j];
                if c > n_groups || c != counts[j * p + i] {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "co-occurrence count at ({i}, {j}) is asymmetric or exceeds n_groups"
                    )));
                }
            }
        }
        Ok(Self {
            pipelines,
            counts,
            n_groups,
            contrast: contrast.into(),
        })
    }

    pub fn pipelines(&self) -> &[PipelineId] {
        &self.pipelines
    }

    pub fn len(&self) -> usize {
        self.pipelines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pipelines.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.len() + j]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n_groups(&self) -> u32 {
        self.n_groups
    }

    pub fn contrast(&self) -> &str {
        &self.contrast
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        f64::from(self.get(i, j)) / f64::from(self.n_groups)
    }

    pub fn rates(&self) -> Vec<f64> {
        let p = self.len();
        (0..p * p).map(|idx| self.rate(idx / p, idx % p)).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.pipelines.iter().map(|p| p.to_string()).collect()
    }
}

/// Counts, for every pipeline pair, the partitions placing both in the same
/// community. Node names must be pipeline ids; the first partition fixes the
/// order.
pub fn cooccurrence(contrast: &str, parts: &[Partition]) -> Result<CoOccurrenceMatrix> {
    let first = parts.first().ok_or(Error::EmptyList)?;
    let nodes = first.nodes();
    let pipelines = nodes
        .iter()
        .map(|s| parse_pipeline_id(s))
        .collect::<Result<Vec<_>>>()?;
    let p = nodes.len();
    let mut counts = alloc::vec![0u32; p * p];
    for part in parts {
        let a = part.aligned_to(nodes)?;
        for i in 0..p {
            for j in 0..p {
                if a[i] == a[j] {
                    counts[i * p + j] += 1;
                }
            }
        }
    }
    let n_groups = u32::try_from(parts.len()).map_err(|_| Error::InvalidConfig("too many partitions".into()))?;
    CoOccurrenceMatrix::new(pipelines, counts, n_groups, contrast)
}

/// Louvain on the graph weighted by raw co-occurrence counts.
pub fn global_communities(c: &CoOccurrenceMatrix, resolution: f64, seed: u64) -> Result<Partition> {
    let p = c.len();
    let mut w = alloc::vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            if i != j {
                w[i * p + j] = f64::from(c.get(i, j));
            }
        }
    }
    let g = WeightedGraph::new(c.labels(), &w)?;
    louvain(&g, resolution, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub cooccurrence: CoOccurrenceMatrix,
    pub global_partition: Partition,
    pub per_pair_rate: Vec<f64>,
    pub mean_similarity: SimilarityMatrix,
}

impl StabilityReport {
    pub fn new(cooccurrence: CoOccurrenceMatrix, global_partition: Partition, mean_similarity: SimilarityMatrix) -> Result<Self> {
        if global_partition.nodes().len() != cooccurrence.len()
            || mean_similarity.pipelines() != cooccurrence.pipelines()
        {
            return Err(Error::NodeSetMismatch);
        }
        let per_pair_rate = cooccurrence.rates();
        Ok(Self {
            cooccurrence,
            global_partition,
            per_pair_rate,
            mean_similarity,
        })
    }

    pub fn pipelines(&self) -> &[PipelineId] {
        self.cooccurrence.pipelines()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAgreement {
    pub a: PipelineId,
    pub b: PipelineId,
    pub rate_a: f64,
    pub rate_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossContrast {
    /// Adjusted Rand index between the two global partitions.
    pub ari: f64,
    /// Pairs sorted by `|rate_a - rate_b|` descending, then canonical order.
    pub pairs: Vec<PairAgreement>,
}

pub fn cross_contrast(a: &StabilityReport, b: &StabilityReport) -> Result<CrossContrast> {
    let pa = a.pipelines();
    let pb = b.pipelines();
    if pa.len() != pb.len() {
        return Err(Error::NodeSetMismatch);
    }
    let map: Vec<usize> = pa
        .iter()
        .map(|id| pb.iter().position(|x| x == id).ok_or(Error::NodeSetMismatch))
        .collect::<Result<_>>()?;
    let ari = adjusted_rand_index(&a.global_partition, &b.global_partition)?;
    let mut pairs = Vec::new();
    for i in 0..pa.len() {
        for j in (i + 1)..pa.len() {
            let rate_a = a.cooccurrence.rate(i, j);
            let rate_b = b.cooccurrence.rate(map[i], map[j]);
            pairs.push(PairAgreement {
                a: pa[i],
                b: pa[j],
                rate_a,
                rate_b,
                delta: (rate_a - rate_b).abs(),
            });
        }
    }
    // stable sort keeps canonical pair order among equal deltas
    pairs.sort_by(|x, y| y.delta.total_cmp(&x.delta));
    Ok(CrossContrast { ari, pairs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnstablePair {
    pub a: PipelineId,
    pub b: PipelineId,
    pub community: usize,
    pub count: u32,
}

/// Same-community pairs (under `p`) whose co-occurrence count is below `low`.
pub fn stability_flags(c: &CoOccurrenceMatrix, p: &Partition, low: u32) -> Result<Vec<UnstablePair>> {
    let nodes = c.labels();
    let assignment = p.aligned_to(&nodes)?;
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in (i + 1)..c.len() {
            if assignment[i] == assignment[j] && c.get(i, j) < low {
                out.push(UnstablePair {
                    a: c.pipelines[i],
                    b: c.pipelines[j],
                    community: assignment[i],
                    count: c.get(i, j),
                });
            }
        }
    }
    Ok(out)
}

/// Default instability threshold: half the number of groups, rounded up.
pub fn default_instability_threshold(n_groups: u32) -> u32 {
    n_groups.div_ceil(2)
}
