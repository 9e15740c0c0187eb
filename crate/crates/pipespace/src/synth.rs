//! Writes synthetic datasets to disk: one NIfTI file per
//! (contrast, group, pipeline), a manifest and `ground_truth.json`.
//!
//! ```ini
//! [synth]
//! dims = 16,16,16
//! n_groups = 100
//! sigma_group = 3
//! sigma_community = 2
//! sigma_noise = 1
//! blob_center = 8,8,8
//! blob_radius = 3
//! blob_amplitude = 8
//! seed = 0
//!
//! [contrast right-hand]
//! planted = software_hrf
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use pipespace_core::synth::{expected_correlations, Blob, Planting, SynthConfig, SynthContrast, SynthGenerator};
use pipespace_core::{parse_pipeline_id, PipelineId};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_list, ConfigFile, KeyValues};
use crate::error::{Error, Result};
use crate::manifest::{write_manifest, Entry};
use crate::nifti::write_volume;
use crate::report::write_json;

pub const SYNTH_KEYS: [&str; 13] = [
    "dims",
    "voxel_mm",
    "n_groups",
    "pipelines",
    "sigma_group",
    "sigma_community",
    "sigma_noise",
    "blob_center",
    "blob_radius",
    "blob_amplitude",
    "scale",
    "seed",
    "contrasts",
];

/// Builds a config from `[synth]` and `[contrast NAME]` sections on top of
/// the defaults.
pub fn synth_config(file: &ConfigFile) -> Result<SynthConfig> {
    let mut cfg = SynthConfig::default();
    let empty = KeyValues::default();
    let kv = file.section("synth").unwrap_or(&empty);
    apply_synth_keys(&mut cfg, kv)?;
    let mut contrasts = Vec::new();
    for (name, section) in &file.sections {
        if let Some(contrast) = name.strip_prefix("contrast ") {
            section.check_keys(&["planted"], name)?;
            let planting = match section.get_str("planted") {
                Some(p) => p.parse::<Planting>()?,
                None => Planting::SoftwareHrf,
            };
            contrasts.push(SynthContrast {
                name: contrast.trim().to_string(),
                planting,
            });
        } else if name != "synth" {
            return Err(Error::Config(format!("unknown section [{name}]")));
        }
    }
    if !contrasts.is_empty() {
        cfg.contrasts = contrasts;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Applies `[synth]`-style keys; also used for command-line overrides.
pub fn apply_synth_keys(cfg: &mut SynthConfig, kv: &KeyValues) -> Result<()> {
    kv.check_keys(&SYNTH_KEYS, "[synth]")?;
    if let Some(d) = kv.get_str("dims") {
        let d: Vec<usize> = parse_list(d, "dims")?;
        cfg.dims = match d.as_slice() {
            [n] => [*n; 3],
            [x, y, z] => [*x, *y, *z],
            _ => return Err(Error::Config("dims needs 1 or 3 values".into())),
        };
    }
    if let Some(v) = kv.get("voxel_mm")? {
        cfg.voxel_mm = v;
    }
    if let Some(v) = kv.get("n_groups")? {
        cfg.n_groups = v;
    }
    if let Some(p) = kv.get_str("pipelines") {
        cfg.pipelines = parse_pipelines(p)?;
    }
    if let Some(v) = kv.get("sigma_group")? {
        cfg.sigma_group = v;
    }
    if let Some(v) = kv.get("sigma_community")? {
        cfg.sigma_community = v;
    }
    if let Some(v) = kv.get("sigma_noise")? {
        cfg.sigma_noise = v;
    }
    if let Some(s) = kv.get_str("scale") {
        cfg.scale = parse_list(s, "scale")?;
    }
    if let Some(v) = kv.get("seed")? {
        cfg.seed = v;
    }
    if let Some(c) = kv.get_str("contrasts") {
        cfg.contrasts = c
            .split(';')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                let (name, planting) = t.split_once(':').unwrap_or((t, "software_hrf"));
                Ok(SynthContrast {
                    name: name.trim().to_string(),
                    planting: planting.parse()?,
                })
            })
            .collect::<Result<_>>()?;
    }
    let center = kv.get_str("blob_center");
    let radius = kv.get::<f64>("blob_radius")?;
    let amplitude = kv.get::<f64>("blob_amplitude")?;
    if center.is_some() || radius.is_some() || amplitude.is_some() {
        let old = cfg.blob.clone();
        let center = match center {
            Some(c) => {
                let c: Vec<usize> = parse_list(c, "blob_center")?;
                <[usize; 3]>::try_from(c).map_err(|_| Error::Config("blob_center needs 3 values".into()))?
            }
            None => old.as_ref().map_or(cfg.dims.map(|d| d / 2), |b| b.center),
        };
        cfg.blob = Some(Blob {
            center,
            radius: radius.or(old.as_ref().map(|b| b.radius)).unwrap_or(3.0),
            amplitude: amplitude.or(old.as_ref().map(|b| b.amplitude)).unwrap_or(8.0),
        });
    }
    Ok(())
}

/// `all`, or pipeline ids separated by `;` or whitespace.
fn parse_pipelines(s: &str) -> Result<Vec<PipelineId>> {
    if s.trim() == "all" {
        return Ok(PipelineId::all());
    }
    s.split(|c: char| c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| Ok(parse_pipeline_id(t)?))
        .collect()
}

/// Files written by [`generate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub manifest: PathBuf,
    pub ground_truth: PathBuf,
    pub n_files: usize,
}

pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<Generated> {
    let generator = SynthGenerator::new(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.contrasts.len())
        .flat_map(|c| (0..cfg.n_groups).map(move |g| (c, g)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(c, g)| {
            let contrast = &cfg.contrasts[c].name;
            let group = cfg.group_id(g);
            let dir = out_dir.join(contrast).join(&group);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            generator
                .group_maps(c, g)?
                .into_iter()
                .map(|(pipeline, volume)| {
                    let path = dir.join(format!("{}.nii", pipeline.hyphenated()));
                    write_volume(&volume, &path)?;
                    Ok(Entry {
                        contrast: contrast.clone(),
                        group_id: group.clone(),
                        pipeline,
                        path,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<Entry> = entries.into_iter().flatten().collect();
    let manifest = out_dir.join("manifest.csv");
    write_manifest(&manifest, &entries)?;
    let ground_truth = out_dir.join("ground_truth.json");
    write_json(&ground_truth, &ground_truth_json(cfg)?)?;
    Ok(Generated {
        manifest,
        ground_truth,
        n_files: entries.len(),
    })
}

pub fn ground_truth_json(cfg: &SynthConfig) -> Result<Value> {
    let expected = expected_correlations(cfg)?;
    let contrasts = (0..cfg.contrasts.len())
        .map(|c| {
            let planted = cfg.planted_partition(c)?;
            let communities: Vec<Vec<&str>> = planted
                .communities()
                .iter()
                .map(|members| members.iter().map(|&i| planted.nodes()[i].as_str()).collect())
                .collect();
            Ok(json!({
                "name": cfg.contrasts[c].name,
                "planting": planting_name(&cfg.contrasts[c].planting),
                "communities": communities,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let blob = cfg.blob.as_ref().map(|b| {
        json!({
            "center": b.center,
            "radius": b.radius,
            "amplitude": b.amplitude,
        })
    });
    Ok(json!({
        "config": {
            "dims": cfg.dims,
            "voxel_mm": cfg.voxel_mm,
            "n_groups": cfg.n_groups,
            "pipelines": cfg.pipelines.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "sigma_group": cfg.sigma_group,
            "sigma_community": cfg.sigma_community,
            "sigma_noise": cfg.sigma_noise,
            "blob": blob,
            "scale": cfg.scale,
            "seed": cfg.seed,
        },
        "contrasts": contrasts,
        "expected_correlations": {
            "within": expected.within,
            "between": expected.between,
        },
        "blob_voxel_count": cfg.blob_voxel_count(),
        "n_voxels": cfg.n_voxels(),
    }))
}

fn planting_name(p: &Planting) -> String {
    match p {
        Planting::SoftwareHrf => "software_hrf".into(),
        Planting::FslHrf => "fsl_hrf".into(),
        Planting::Software => "software".into(),
        Planting::Hrf => "hrf".into(),
        Planting::Single => "single".into(),
        Planting::Explicit(labels) => labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sections() {
        let text = "[synth]\ndims = 8\nn_groups = 3\nblob_amplitude = 5\n\n[contrast a]\nplanted = software_hrf\n\n[contrast b]\nplanted = fsl_hrf\n";
        let cfg = synth_config(&ConfigFile::parse(text).unwrap()).unwrap();
        assert_eq!(cfg.dims, [8, 8, 8]);
        assert_eq!(cfg.n_groups, 3);
        assert_eq!(cfg.contrasts.len(), 2);
        assert_eq!(cfg.contrasts[1].planting, Planting::FslHrf);
        let blob = cfg.blob.unwrap();
        assert_eq!((blob.center, blob.radius, blob.amplitude), ([4, 4, 4], 3.0, 5.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[synth]\nn_group = 3\n";
        assert!(synth_config(&ConfigFile::parse(text).unwrap()).is_err());
    }

    #[test]
    fn pipeline_lists() {
        assert_eq!(parse_pipelines("all").unwrap().len(), 24);
        let p = parse_pipelines("fsl-5-0-0; spm,8,24,1").unwrap();
        assert_eq!(p[1].to_string(), "spm,8,24,1");
    }
}
