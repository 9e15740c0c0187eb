//! Synthetic multi-pipeline datasets with planted community structure.
//!
//! For group `g` and pipeline `p` in planted community `k(p)` the map is
//!
//! ```text
//! scale_p * (blob + G_g + C_{k(p),g} + E_{p,g})
//! ```
//!
//! where `G`, `C` and `E` are independent per-voxel normal fields with
//! standard deviations `sigma_group`, `sigma_community` and `sigma_noise`.
//! Without a blob, two pipelines correlate at
//! `(sG^2 + sC^2) / (sG^2 + sC^2 + sE^2)` when they share a community and
//! `sG^2 / (sG^2 + sC^2 + sE^2)` otherwise; positive scales do not change
//! either value.
//!
//! Every field is drawn from its own ChaCha stream keyed by
//! (field kind, contrast, group, index), so a map can be regenerated alone
//! and generation order never affects the output.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{canonical_labels, Partition};
use crate::hash::Fnv64;
use crate::pipeline::{PipelineId, Software};
use crate::volume::{scaled_affine, Affine, Volume};

/// Named rules for assigning pipelines to planted communities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Planting {
    /// One community per (software, HRF derivatives): 4 communities.
    SoftwareHrf,
    /// FSL split by HRF derivatives, SPM together: 3 communities.
    FslHrf,
    Software,
    Hrf,
    Single,
    /// Explicit labels, one per configured pipeline.
    Explicit(Vec<usize>),
}

impl Planting {
    pub fn labels(&self, pipelines: &[PipelineId]) -> Result<Vec<usize>> {
        let raw: Vec<usize> = match self {
            Planting::SoftwareHrf => pipelines
                .iter()
                .map(|p| 2 * usize::from(p.software() == Software::Spm) + usize::from(p.hrf_deriv()))
                .collect(),
            Planting::FslHrf => pipelines
                .iter()
                .map(|p| match p.software() {
                    Software::Fsl => usize::from(p.hrf_deriv()),
                    Software::Spm => 2,
                })
                .collect(),
            Planting::Software => pipelines.iter().map(|p| usize::from(p.software() == Software::Spm)).collect(),
            Planting::Hrf => pipelines.iter().map(|p| usize::from(p.hrf_deriv())).collect(),
            Planting::Single => alloc::vec![0; pipelines.len()],
            Planting::Explicit(labels) => {
                if labels.len() != pipelines.len() {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "{} planted labels for {} pipelines",
                        labels.len(),
                        pipelines.len()
                    )));
                }
                labels.clone()
            }
        };
        Ok(canonical_labels(&raw))
    }
}

impl FromStr for Planting {
    type Err = Error;

    /// Scheme name, or comma-separated labels in pipeline order.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "software_hrf" => Planting::SoftwareHrf,
            "fsl_hrf" => Planting::FslHrf,
            "software" => Planting::Software,
            "hrf" => Planting::Hrf,
            "single" => Planting::Single,
            other => Planting::Explicit(
                other
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<core::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidConfig(alloc::format!("unknown planting {other:?}")))?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub center: [usize; 3],
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthContrast {
    pub name: String,
    pub planting: Planting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dims: [usize; 3],
    pub voxel_mm: f64,
    pub n_groups: usize,
    pub pipelines: Vec<PipelineId>,
    pub contrasts: Vec<SynthContrast>,
    pub sigma_group: f64,
    pub sigma_community: f64,
    pub sigma_noise: f64,
    pub blob: Option<Blob>,
    /// Per-pipeline multipliers, aligned with `pipelines`; empty means 1.
    pub scale: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dims: [16, 16, 16],
            voxel_mm: 2.0,
            n_groups: 100,
            pipelines: PipelineId::all(),
            contrasts: alloc::vec![SynthContrast {
                name: "right-hand".into(),
                planting: Planting::SoftwareHrf,
            }],
            sigma_group: 3.0,
            sigma_community: 2.0,
            sigma_noise: 1.0,
            blob: None,
            scale: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.dims.contains(&0) {
            return bad("dims must be positive");
        }
        if self.n_groups == 0 {
            return bad("n_groups must be at least 1");
        }
        if self.pipelines.is_empty() {
            return bad("no pipelines");
        }
        if self.contrasts.is_empty() {
            return bad("no contrasts");
        }
        for (i, c) in self.contrasts.iter().enumerate() {
            if self.contrasts[..i].iter().any(|o| o.name == c.name) {
                return bad("duplicate contrast name");
            }
            c.planting.labels(&self.pipelines)?;
        }
        let mut sorted = self.pipelines.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.pipelines.len() {
            return bad("duplicate pipelines");
        }
        let sigmas = [self.sigma_group, self.sigma_community, self.sigma_noise];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("standard deviations must be finite and non-negative");
        }
        if sigmas.iter().all(|&s| s == 0.0) {
            return bad("at least one standard deviation must be positive");
        }
        if !(self.voxel_mm.is_finite() && self.voxel_mm > 0.0) {
            return bad("voxel size must be positive");
        }
        if !self.scale.is_empty() {
            if self.scale.len() != self.pipelines.len() {
                return bad("scale needs one multiplier per pipeline");
            }
            if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return bad("scales must be positive");
            }
        }
        if let Some(b) = &self.blob {
            let min_dim = *self.dims.iter().min().unwrap_or(&0) as f64;
            if !(b.radius >= 0.0 && b.radius < min_dim / 2.0) {
                return bad("blob radius must be below half the smallest dimension");
            }
            if (0..3).any(|a| b.center[a] >= self.dims[a]) {
                return bad("blob center outside the grid");
            }
            if !b.amplitude.is_finite() {
                return bad("blob amplitude must be finite");
            }
        }
        Ok(())
    }

    pub fn affine(&self) -> Affine {
        let origin = self.dims.map(|d| -(self.voxel_mm * (d as f64 - 1.0) / 2.0));
        scaled_affine([self.voxel_mm; 3], origin)
    }

    pub fn n_voxels(&self) -> usize {
        self.dims.iter().product()
    }

    /// Zero-padded group ids `g001`, `g002`, ...
    pub fn group_id(&self, group: usize) -> String {
        let width = self.n_groups.to_string().len().max(3);
        alloc::format!("g{:0width$}", group + 1)
    }

    pub fn planted_labels(&self, contrast: usize) -> Result<Vec<usize>> {
        self.contrasts
            .get(contrast)
            .ok_or(Error::InvalidConfig("no such contrast".into()))?
            .planting
            .labels(&self.pipelines)
    }

    /// Planted partition with nodes in canonical pipeline order.
    pub fn planted_partition(&self, contrast: usize) -> Result<Partition> {
        let labels = self.planted_labels(contrast)?;
        let mut order: Vec<usize> = (0..self.pipelines.len()).collect();
        order.sort_by(|&a, &b| self.pipelines[a].cmp(&self.pipelines[b]));
        let nodes = order.iter().map(|&i| self.pipelines[i].to_string()).collect();
        let assignment: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        Partition::from_labels(nodes, &assignment, f64::NAN, 1.0)
    }

    /// Blob membership per voxel (x-fastest).
    pub fn blob_mask(&self) -> Vec<bool> {
        let [nx, ny, nz] = self.dims;
        let mut out = alloc::vec![false; nx * ny * nz];
        if let Some(b) = &self.blob {
            let r2 = b.radius * b.radius;
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let d = [i, j, k]
                            .iter()
                            .zip(b.center)
                            .map(|(&x, c)| {
                                let t = x as f64 - c as f64;
                                t * t
                            })
                            .sum::<f64>();
                        out[i + nx * (j + ny * k)] = d <= r2;
                    }
                }
            }
        }
        out
    }

    pub fn blob_voxel_count(&self) -> usize {
        self.blob_mask().iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCorrelations {
    pub within: f64,
    pub between: f64,
}

/// Population correlations implied by the latent model.
///
/// A blob enters as a shared deterministic signal with spatial variance
/// `A^2 f (1 - f)`, `f` being the fraction of blob voxels.
pub fn expected_correlations(cfg: &SynthConfig) -> Result<ExpectedCorrelations> {
    let blob_var = match &cfg.blob {
        Some(b) => {
            let f = cfg.blob_voxel_count() as f64 / cfg.n_voxels() as f64;
            b.amplitude * b.amplitude * f * (1.0 - f)
        }
        None => 0.0,
    };
    let g = cfg.sigma_group * cfg.sigma_group + blob_var;
    let c = cfg.sigma_community * cfg.sigma_community;
    let e = cfg.sigma_noise * cfg.sigma_noise;
    let total = g + c + e;
    if total == 0.0 {
        return Err(Error::InvalidConfig("all variance components are zero".into()));
    }
    Ok(ExpectedCorrelations {
        within: (g + c) / total,
        between: g / total,
    })
}

#[derive(Clone, Copy)]
enum Field {
    Group = 1,
    Community = 2,
    Noise = 3,
}

pub struct SynthGenerator<'a> {
    cfg: &'a SynthConfig,
    blob: Vec<f64>,
}

impl<'a> SynthGenerator<'a> {
    pub fn new(cfg: &'a SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let amplitude = cfg.blob.as_ref().map_or(0.0, |b| b.amplitude);
        let blob = cfg.blob_mask().iter().map(|&b| if b { amplitude } else { 0.0 }).collect();
        Ok(Self { cfg, blob })
    }

    fn field(&self, kind: Field, contrast: usize, group: usize, index: usize, sigma: f64) -> Vec<f64> {
        let n = self.cfg.n_voxels();
        if sigma == 0.0 {
            return alloc::vec![0.0; n];
        }
        let stream = Fnv64::new()
            .write_u64(kind as u64)
            .write_u64(contrast as u64)
            .write_u64(group as u64)
            .write_u64(index as u64)
            .finish();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream);
        (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    /// All pipeline maps of one group, in configured pipeline order.
    pub fn group_maps(&self, contrast: usize, group: usize) -> Result<Vec<(PipelineId, Volume)>> {
        let cfg = self.cfg;
        let labels = cfg.planted_labels(contrast)?;
        let n_comm = labels.iter().max().map_or(0, |m| m + 1);
        let shared = self.field(Field::Group, contrast, group, 0, cfg.sigma_group);
        let community: Vec<Vec<f64>> = (0..n_comm)
            .map(|k| self.field(Field::Community, contrast, group, k, cfg.sigma_community))
            .collect();
        let affine = cfg.affine();
        cfg.pipelines
            .iter()
            .enumerate()
            .map(|(p, id)| {
                let noise = self.field(Field::Noise, contrast, group, p, cfg.sigma_noise);
                let scale = cfg.scale.get(p).copied().unwrap_or(1.0);
                let c = &community[labels[p]];
                let data = (0..cfg.n_voxels())
                    .map(|v| scale * (self.blob[v] + shared[v] + c[v] + noise[v]))
                    .collect();
                Ok((*id, Volume::new(cfg.dims, affine, data)?))
            })
            .collect()
    }
}
