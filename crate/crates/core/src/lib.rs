//! Pipeline-space analysis core.
//!
//! Statistic maps from many analysis pipelines are compared by Pearson
//! correlation within each group of subjects. Each group's correlation graph
//! is partitioned with Louvain; counting how often two pipelines share a
//! community across groups measures the stability of their relationship,
//! and a second Louvain pass over those counts yields global communities.
//! Communities are then characterised by FDR-thresholded activation counts.
//!
//! This crate holds the algorithms and needs only `alloc`. File formats,
//! dataset manifests and the command line live in the `pipespace` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ari;
pub mod error;
pub mod features;
pub mod graph;
pub mod hash;
pub mod louvain;
pub mod oracle;
pub mod pipeline;
pub mod resample;
pub mod similarity;
pub mod stability;
pub mod synth;
pub mod volume;

pub use ari::adjusted_rand_index;
pub use error::{Error, Result};
pub use graph::{from_similarity, modularity, Partition, WeightedGraph};
pub use louvain::louvain;
pub use oracle::brute_force_best_partition;
pub use pipeline::{parse_pipeline_id, PipelineId, Software};
pub use resample::{apply_mask, intersect_masks, resample_continuous, resample_nearest, MaskedVector};
pub use similarity::{mean_similarity, pearson, SimilarityMatrix};
pub use stability::{
    cooccurrence, cross_contrast, global_communities, stability_flags, CoOccurrenceMatrix, StabilityReport,
};
pub use volume::{Affine, TargetGrid, Volume};
