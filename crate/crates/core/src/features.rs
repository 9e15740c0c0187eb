//! Community characterisation: mean maps, FDR thresholding under a standard
//! normal null, and activated-voxel counts over the whole mask and an ROI.
//!
//! Values are treated as z-scores and tested one-sided (upper tail).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pipeline::PipelineId;
use crate::resample::{resample_nearest, MaskedVector};
use crate::volume::{TargetGrid, Volume};

/// Running voxelwise sum, for averaging maps without holding them all.
#[derive(Debug, Clone)]
pub struct MeanAccumulator {
    sum: Vec<f64>,
    mask_hash: u64,
    count: usize,
}

impl MeanAccumulator {
    pub fn new(first: &MaskedVector) -> Self {
        Self {
            sum: first.values().to_vec(),
            mask_hash: first.mask_hash(),
            count: 1,
        }
    }

    pub fn add(&mut self, v: &MaskedVector) -> Result<()> {
        if v.mask_hash() != self.mask_hash || v.n_voxels() != self.sum.len() {
            return Err(Error::MaskMismatch);
        }
        for (acc, x) in self.sum.iter_mut().zip(v.values()) {
            *acc += x;
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<MaskedVector> {
        let n = self.count as f64;
        MaskedVector::new(self.sum.into_iter().map(|s| s / n).collect(), self.mask_hash)
    }
}

pub fn mean_map(maps: &[MaskedVector]) -> Result<MaskedVector> {
    let (first, rest) = maps.split_first().ok_or(Error::EmptyList)?;
    let mut acc = MeanAccumulator::new(first);
    for m in rest {
        acc.add(m)?;
    }
    acc.finish()
}

/// Upper-tail standard normal probability `1 - Phi(z)`.
pub fn z_to_p(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(0.5 * libm::erfc(z / core::f64::consts::SQRT_2))
}

/// Benjamini-Hochberg step-up outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdrResult {
    pub n_rejected: usize,
    pub n_tests: usize,
    pub q: f64,
    /// Largest rejected p-value; every p at or below it is rejected.
    pub p_cutoff: Option<f64>,
}

pub fn fdr_bh(pvals: &[f64], q: f64) -> Result<FdrResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::BadQ(q));
    }
    if let Some(&bad) = pvals.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::BadP(bad));
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let k = sorted
        .iter()
        .enumerate()
        .rev()
        .find(|&(i, &p)| p <= (i + 1) as f64 * q / m)
        .map_or(0, |(i, _)| i + 1);
    Ok(FdrResult {
        n_rejected: k,
        n_tests: sorted.len(),
        q,
        p_cutoff: k.checked_sub(1).map(|i| sorted[i]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// z of the largest rejected p (the smallest active z), if any.
    pub z_threshold: Option<f64>,
    pub n_rejected: usize,
    pub q: f64,
    pub n_tests: usize,
}

/// Binary (0/1) map of voxels surviving BH at level `q`.
pub fn threshold_map(mean: &MaskedVector, q: f64) -> Result<(MaskedVector, ThresholdResult)> {
    let pvals = mean.values().iter().map(|&z| z_to_p(z)).collect::<Result<Vec<_>>>()?;
    let fdr = fdr_bh(&pvals, q)?;
    let active: Vec<f64> = pvals
        .iter()
        .map(|&p| match fdr.p_cutoff {
            Some(cut) if p <= cut => 1.0,
            _ => 0.0,
        })
        .collect();
    let z_threshold = mean
        .values()
        .iter()
        .zip(&active)
        .filter(|(_, &a)| a > 0.0)
        .map(|(&z, _)| z)
        .reduce(f64::min);
    let result = ThresholdResult {
        z_threshold,
        n_rejected: fdr.n_rejected,
        q,
        n_tests: fdr.n_tests,
    };
    Ok((MaskedVector::new(active, mean.mask_hash())?, result))
}

/// Binary ROI on `grid` from a probabilistic atlas in [0, 1] (or percent).
pub fn roi_mask(atlas: &Volume, grid: &TargetGrid, prob_threshold: f64) -> Result<Volume> {
    let (min, max) = atlas
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min < 0.0 || max > 100.0 {
        return Err(Error::BadAtlasRange { min, max });
    }
    let scale = if max > 1.0 { 0.01 } else { 1.0 };
    let resampled = resample_nearest(atlas, grid)?;
    let data = resampled
        .data()
        .iter()
        .map(|&v| if v * scale >= prob_threshold { 1.0 } else { 0.0 })
        .collect();
    Volume::new(grid.dims(), *grid.affine(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveCounts {
    pub whole: usize,
    pub roi: usize,
}

/// `roi` must be masked with the same mask as `active`.
pub fn count_active(active: &MaskedVector, roi: Option<&MaskedVector>) -> Result<ActiveCounts> {
    let whole = active.values().iter().filter(|&&a| a > 0.5).count();
    let roi = match roi {
        None => 0,
        Some(r) => {
            if r.mask_hash() != active.mask_hash() || r.n_voxels() != active.n_voxels() {
                return Err(Error::GridMismatch);
            }
            active
                .values()
                .iter()
                .zip(r.values())
                .filter(|(&a, &m)| a > 0.5 && m > 0.5)
                .count()
        }
    };
    Ok(ActiveCounts { whole, roi })
}

/// One line of the community feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub contrast: alloc::string::String,
    pub pipeline: PipelineId,
    pub community: usize,
    pub n_active_whole: usize,
    pub n_active_roi: usize,
    pub z_threshold: Option<f64>,
    pub q: f64,
}
