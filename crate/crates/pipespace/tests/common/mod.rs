#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pipespace::manifest::{write_manifest, Entry};
use pipespace::nifti::write_volume;
use pipespace_core::volume::scaled_affine;
use pipespace_core::{PipelineId, Volume};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pipespace"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pipespace")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn grid_affine() -> pipespace_core::Affine {
    scaled_affine([2.0; 3], [-6.0; 3])
}

pub fn volume(dims: [usize; 3], data: Vec<f64>) -> Volume {
    Volume::new(dims, grid_affine(), data).unwrap()
}

/// Writes `maps[(contrast, group, pipeline)]` under `dir` with a manifest.
pub fn dataset(dir: &Path, maps: &[(&str, &str, PipelineId, Volume)]) -> PathBuf {
    let mut entries = Vec::new();
    for (c, g, p, v) in maps {
        let sub = dir.join(c).join(g);
        std::fs::create_dir_all(&sub).unwrap();
        let path = sub.join(format!("{}.nii", p.hyphenated()));
        write_volume(v, &path).unwrap();
        entries.push(Entry {
            contrast: c.to_string(),
            group_id: g.to_string(),
            pipeline: *p,
            path,
        });
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &entries).unwrap();
    manifest
}

/// Deterministic pseudo-random field for fixtures.
pub fn field(n: usize, salt: u64) -> Vec<f64> {
    let mut x = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn pid(s: &str) -> PipelineId {
    s.parse().unwrap()
}
