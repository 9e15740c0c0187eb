//! Dataset manifest: a CSV listing one statistic map per
//! (contrast, group, pipeline).
//!
//! ```text
//! contrast,group_id,pipeline_id,path
//! right-hand,g001,"fsl,5,0,0",right-hand/g001/fsl-5-0-0.nii
//! ```
//!
//! Relative paths resolve against the manifest's directory. The dataset must
//! be rectangular: every contrast has every group, and every (contrast,
//! group) has every pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use pipespace_core::{parse_pipeline_id, PipelineId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 4] = ["contrast", "group_id", "pipeline_id", "path"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub contrast: String,
    pub group_id: String,
    pub pipeline: PipelineId,
    pub path: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    contrast: String,
    group_id: String,
    pipeline_id: String,
    path: String,
}

/// Immutable, validated index of a rectangular dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetIndex {
    entries: Vec<Entry>,
    contrasts: Vec<String>,
    groups: Vec<String>,
    pipelines: Vec<PipelineId>,
    lookup: BTreeMap<(String, String, PipelineId), usize>,
}

impl DatasetIndex {
    pub fn new(entries: Vec<Entry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::MalformedManifest("no entries".into()));
        }
        let mut lookup = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            let key = (e.contrast.clone(), e.group_id.clone(), e.pipeline);
            if lookup.insert(key, i).is_some() {
                return Err(Error::MalformedManifest(format!(
                    "duplicate entry ({}, {}, {})",
                    e.contrast, e.group_id, e.pipeline
                )));
            }
        }
        let contrasts = first_seen(entries.iter().map(|e| e.contrast.clone()));
        let groups = first_seen(entries.iter().map(|e| e.group_id.clone()));
        let pipelines: BTreeSet<PipelineId> = entries.iter().map(|e| e.pipeline).collect();
        let pipelines: Vec<PipelineId> = pipelines.into_iter().collect();

        let mut missing = Vec::new();
        for c in &contrasts {
            for g in &groups {
                for p in &pipelines {
                    if !lookup.contains_key(&(c.clone(), g.clone(), *p)) {
                        missing.push((c.clone(), g.clone(), p.to_string()));
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::NonRectangularDataset { missing });
        }
        Ok(Self {
            entries,
            contrasts,
            groups,
            pipelines,
            lookup,
        })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Contrasts in order of first appearance.
    pub fn contrasts(&self) -> &[String] {
        &self.contrasts
    }

    /// Groups in order of first appearance.
    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    /// Pipelines in canonical order.
    pub fn pipelines(&self) -> &[PipelineId] {
        &self.pipelines
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self, contrast: &str, group_id: &str, pipeline: PipelineId) -> Option<&Path> {
        self.lookup
            .get(&(contrast.to_string(), group_id.to_string(), pipeline))
            .map(|&i| self.entries[i].path.as_path())
    }

    pub fn has_contrast(&self, contrast: &str) -> bool {
        self.contrasts.iter().any(|c| c == contrast)
    }
}

fn first_seen(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.filter(|s| seen.insert(s.clone())).collect()
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetIndex> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::MalformedManifest(format!(
            "{}: header must be `{}`",
            path.display(),
            HEADER.join(",")
        )));
    }
    let mut entries = Vec::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
        let pipeline = parse_pipeline_id(&row.pipeline_id).map_err(|e| {
            Error::MalformedManifest(format!("{} row {}: {e}", path.display(), line + 2))
        })?;
        if row.contrast.is_empty() || row.group_id.is_empty() || row.path.is_empty() {
            return Err(Error::MalformedManifest(format!(
                "{} row {}: empty field",
                path.display(),
                line + 2
            )));
        }
        let p = PathBuf::from(&row.path);
        entries.push(Entry {
            contrast: row.contrast,
            group_id: row.group_id,
            pipeline,
            path: if p.is_absolute() { p } else { base.join(p) },
        });
    }
    DatasetIndex::new(entries)
}

/// Writes a manifest whose paths are relative to its own directory when
/// possible.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[Entry]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    for e in entries {
        let rel = e.path.strip_prefix(base).unwrap_or(&e.path);
        w.serialize(Row {
            contrast: e.contrast.clone(),
            group_id: e.group_id.clone(),
            pipeline_id: e.pipeline.to_string(),
            path: rel.to_string_lossy().replace('\\', "/"),
        })
        .map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
