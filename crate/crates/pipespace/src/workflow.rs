//! Dataset-level steps: load maps onto a common grid and mask, build
//! per-group similarity matrices, partition them, and aggregate stability
//! and community features.
//!
//! Work is spread over the current rayon pool. Every parallel map collects
//! results in input order and every reduction is exact (integer counts,
//! logical AND), so outputs do not depend on the number of workers.

use std::path::{Path, PathBuf};

use pipespace_core::features::{count_active, roi_mask, threshold_map, FeatureRow, MeanAccumulator};
use pipespace_core::resample::{apply_mask, intersect_masks, mask_digest, resample_continuous, resample_nearest};
use pipespace_core::similarity::similarity_matrix;
use pipespace_core::stability::{cooccurrence, global_communities, partition_group, PartitionParams};
use pipespace_core::{
    mean_similarity, MaskedVector, Partition, PipelineId, SimilarityMatrix, StabilityReport, TargetGrid, Volume,
};
use rayon::prelude::*;

use crate::error::{Error, Result, ResultExt};
use crate::manifest::DatasetIndex;
use crate::nifti::{read_volume, NanPolicy};

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Grid of the first volume listed in the manifest.
    FirstVolume,
    /// Grid of a reference volume.
    Like(PathBuf),
    Explicit(TargetGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSpec {
    /// Intersection of the non-zero support of every selected map.
    Auto,
    File(PathBuf),
}

/// Dataset bound to a common grid and brain mask.
#[derive(Debug, Clone)]
pub struct Workspace {
    index: DatasetIndex,
    grid: TargetGrid,
    mask: Volume,
}

impl Workspace {
    pub fn open(index: DatasetIndex, grid: &GridSpec, mask: &MaskSpec, contrasts: &[String]) -> Result<Self> {
        for c in contrasts {
            if !index.has_contrast(c) {
                return Err(Error::Config(format!("contrast {c:?} is not in the manifest")));
            }
        }
        let grid = match grid {
            GridSpec::FirstVolume => read_volume(&index.entries()[0].path, NanPolicy::Zero)?.grid(),
            GridSpec::Like(path) => read_volume(path, NanPolicy::Zero)?.grid(),
            GridSpec::Explicit(g) => g.clone(),
        };
        let mask = match mask {
            MaskSpec::File(path) => load_mask(path, &grid)?,
            MaskSpec::Auto => auto_mask(&index, contrasts, &grid)?,
        };
        let n = mask.count_above_half();
        if n == 0 {
            log::warn!("brain mask is empty");
        } else {
            log::info!("brain mask: {n} voxels");
        }
        Ok(Self { index, grid, mask })
    }

    pub fn index(&self) -> &DatasetIndex {
        &self.index
    }

    pub fn grid(&self) -> &TargetGrid {
        &self.grid
    }

    pub fn mask(&self) -> &Volume {
        &self.mask
    }

    pub fn mask_hash(&self) -> u64 {
        mask_digest(&self.mask)
    }

    pub fn pipelines(&self) -> &[PipelineId] {
        self.index.pipelines()
    }

    pub fn groups(&self) -> &[String] {
        self.index.groups()
    }

    /// Reads one map, resamples it (trilinear) onto the grid and masks it.
    pub fn load_masked(&self, contrast: &str, group: &str, pipeline: PipelineId) -> Result<MaskedVector> {
        load_masked(&self.index, contrast, group, pipeline, &self.grid, &self.mask)
    }

    pub fn group_similarity(&self, contrast: &str, group: &str) -> Result<SimilarityMatrix> {
        group_similarity(&self.index, contrast, group, &self.grid, &self.mask)
    }

    /// One matrix per group, in manifest group order.
    pub fn similarities(&self, contrast: &str) -> Result<Vec<SimilarityMatrix>> {
        self.groups()
            .par_iter()
            .map(|g| self.group_similarity(contrast, g))
            .collect()
    }

    /// Mean map of every pipeline across groups, in canonical pipeline order.
    pub fn mean_maps(&self, contrast: &str) -> Result<Vec<(PipelineId, MaskedVector)>> {
        self.pipelines()
            .par_iter()
            .map(|&p| {
                let mut acc: Option<MeanAccumulator> = None;
                for g in self.groups() {
                    let v = self.load_masked(contrast, g, p)?;
                    match acc.as_mut() {
                        None => acc = Some(MeanAccumulator::new(&v)),
                        Some(a) => a.add(&v)?,
                    }
                }
                let acc = acc.ok_or(Error::Core(pipespace_core::Error::EmptyList))?;
                Ok((p, acc.finish()?))
            })
            .collect()
    }

    /// ROI from a probabilistic atlas, restricted to the brain mask.
    pub fn roi_vector(&self, atlas: &Path, prob_threshold: f64) -> Result<MaskedVector> {
        let atlas = read_volume(atlas, NanPolicy::Reject)?;
        let roi = roi_mask(&atlas, &self.grid, prob_threshold)?;
        let values: Vec<f64> = roi
            .data()
            .iter()
            .zip(self.mask.data())
            .filter(|(_, &m)| m > 0.5)
            .map(|(&r, _)| r)
            .collect();
        let n = values.iter().filter(|&&v| v > 0.5).count();
        if n == 0 {
            log::warn!("ROI has no voxels inside the brain mask");
        }
        Ok(MaskedVector::new(values, self.mask_hash())?)
    }
}

/// Reads a mask, resamples it (nearest) onto `grid` and binarizes at > 0.5.
pub fn load_mask(path: &Path, grid: &TargetGrid) -> Result<Volume> {
    let m = read_volume(path, NanPolicy::Reject)?;
    let m = resample_nearest(&m, grid).context(|| path.display().to_string())?;
    Ok(intersect_masks(&[m])?)
}

fn auto_mask(index: &DatasetIndex, contrasts: &[String], grid: &TargetGrid) -> Result<Volume> {
    let entries: Vec<_> = index
        .entries()
        .iter()
        .filter(|e| contrasts.is_empty() || contrasts.contains(&e.contrast))
        .collect();
    let supports = entries
        .par_iter()
        .map(|e| {
            let v = read_volume(&e.path, NanPolicy::Zero)?;
            let support: Vec<f64> = v.data().iter().map(|&x| f64::from(u8::from(x != 0.0))).collect();
            let support = Volume::new(v.dims(), *v.affine(), support)?;
            Ok(resample_nearest(&support, grid)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(intersect_masks(&supports)?)
}

/// Pearson similarity of all pipelines of one group.
pub fn group_similarity(
    index: &DatasetIndex,
    contrast: &str,
    group: &str,
    grid: &TargetGrid,
    mask: &Volume,
) -> Result<SimilarityMatrix> {
    let maps = index
        .pipelines()
        .iter()
        .map(|&p| Ok((p, load_masked(index, contrast, group, p, grid, mask)?)))
        .collect::<Result<Vec<_>>>()?;
    similarity_matrix(&maps, contrast, group).map_err(|e| {
        let pair = match e.b {
            Some(b) => format!("pipelines {} / {}", e.a, b),
            None => format!("pipeline {}", e.a),
        };
        Error::Core(e.error).context(format!("contrast {contrast}, group {group}, {pair}"))
    })
}

pub fn load_masked(
    index: &DatasetIndex,
    contrast: &str,
    group: &str,
    pipeline: PipelineId,
    grid: &TargetGrid,
    mask: &Volume,
) -> Result<MaskedVector> {
    let context = || format!("contrast {contrast}, group {group}, pipeline {pipeline}");
    let path = index
        .path(contrast, group, pipeline)
        .ok_or_else(|| Error::Config(format!("no map for ({contrast}, {group}, {pipeline})")))?;
    let v = read_volume(path, NanPolicy::Zero).context(context)?;
    let v = resample_continuous(&v, grid).context(context)?;
    apply_mask(&v, mask).context(context)
}

#[derive(Debug, Clone)]
pub struct StabilityRun {
    pub report: StabilityReport,
    pub similarities: Vec<SimilarityMatrix>,
    pub group_partitions: Vec<Partition>,
    /// Negative correlations clamped to 0, summed over groups.
    pub clamped: usize,
}

/// Partitions of every group of `contrast`, in manifest group order.
pub fn partitions_for(mats: &[SimilarityMatrix], params: &PartitionParams) -> Result<Vec<(Partition, usize)>> {
    mats.par_iter()
        .map(|m| {
            partition_group(m, params)
                .map(|gp| (gp.partition, gp.clamped))
                .context(|| format!("contrast {}, group {}", m.contrast(), m.group_id()))
        })
        .collect()
}

pub fn per_group_partitions(ws: &Workspace, contrast: &str, params: &PartitionParams) -> Result<Vec<Partition>> {
    let mats = ws.similarities(contrast)?;
    Ok(partitions_for(&mats, params)?.into_iter().map(|(p, _)| p).collect())
}

/// Steps 1 to 4 for one contrast.
pub fn run_stability(ws: &Workspace, contrast: &str, params: &PartitionParams) -> Result<StabilityRun> {
    let similarities = ws.similarities(contrast)?;
    let parts = partitions_for(&similarities, params)?;
    let clamped = parts.iter().map(|(_, c)| c).sum();
    if clamped > 0 {
        log::warn!("{contrast}: clamped {clamped} negative correlations to 0");
    }
    let group_partitions: Vec<Partition> = parts.into_iter().map(|(p, _)| p).collect();
    let cooc = cooccurrence(contrast, &group_partitions).context(|| format!("contrast {contrast}"))?;
    let global = global_communities(&cooc, params.resolution, params.seed).context(|| format!("contrast {contrast}"))?;
    let mean = mean_similarity(&similarities)?;
    let report = StabilityReport::new(cooc, global, mean)?;
    Ok(StabilityRun {
        report,
        similarities,
        group_partitions,
        clamped,
    })
}

/// Thresholded mean-map features of every pipeline, grouped by community.
pub struct FeatureRun {
    pub rows: Vec<FeatureRow>,
    pub means: Vec<(PipelineId, MaskedVector)>,
    pub active: Vec<MaskedVector>,
}

pub fn community_features(
    ws: &Workspace,
    contrast: &str,
    partition: &Partition,
    roi: Option<&MaskedVector>,
    q: f64,
) -> Result<FeatureRun> {
    let means = ws.mean_maps(contrast)?;
    let labels: Vec<String> = means.iter().map(|(p, _)| p.to_string()).collect();
    let communities = partition
        .aligned_to(&labels)
        .context(|| format!("partition does not cover the pipelines of {contrast}"))?;
    let results = means
        .par_iter()
        .zip(communities.par_iter())
        .map(|((p, mean), &community)| {
            let (active, t) = threshold_map(mean, q).context(|| format!("pipeline {p}"))?;
            let counts = count_active(&active, roi)?;
            Ok((
                FeatureRow {
                    contrast: contrast.to_string(),
                    pipeline: *p,
                    community,
                    n_active_whole: counts.whole,
                    n_active_roi: counts.roi,
                    z_threshold: t.z_threshold,
                    q,
                },
                active,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by_key(|&i| (results[i].0.community, results[i].0.pipeline));
    let mut rows = Vec::with_capacity(order.len());
    let mut active = Vec::with_capacity(order.len());
    let mut slots: Vec<Option<(FeatureRow, MaskedVector)>> = results.into_iter().map(Some).collect();
    for i in order {
        let (r, a) = slots[i].take().ok_or_else(|| Error::Internal("feature row taken twice".into()))?;
        rows.push(r);
        active.push(a);
    }
    Ok(FeatureRun { rows, means, active })
}
