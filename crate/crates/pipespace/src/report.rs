//! CSV and JSON report writers. JSON objects are emitted with sorted keys;
//! floats use the shortest round-trip representation so that reruns are
//! byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use pipespace_core::stability::{CrossContrast, UnstablePair};
use pipespace_core::features::FeatureRow;
use pipespace_core::{CoOccurrenceMatrix, Partition, PipelineId, SimilarityMatrix};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Written into every stability and feature report.
pub const Z_ASSUMPTION: &str = "map values treated as z-scores; one-sided upper-tail p-values";
pub const CROSS_CONTRAST_MEASURE: &str = "adjusted Rand index between global partitions";

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&sort_keys(v.clone())).unwrap_or_default();
    s.push('\n');
    s
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, to_json_string(v)).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// RFC 4180 writer (CRLF line ends).
fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn matrix_rows(labels: &[String], cell: impl Fn(usize, usize) -> String) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["pipeline".to_string()];
    header.extend(labels.iter().cloned());
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut row = vec![l.clone()];
            row.extend((0..labels.len()).map(|j| cell(i, j)));
            row
        })
        .collect();
    (header, rows)
}

fn labels_of(p: &[PipelineId]) -> Vec<String> {
    p.iter().map(|id| id.to_string()).collect()
}

pub fn write_similarity_csv(path: &Path, m: &SimilarityMatrix) -> Result<()> {
    let (header, rows) = matrix_rows(&labels_of(m.pipelines()), |i, j| num(m.get(i, j)));
    write_rows(path, &header, &rows)
}

pub fn write_cooccurrence_csv(path: &Path, c: &CoOccurrenceMatrix) -> Result<()> {
    let (header, rows) = matrix_rows(&labels_of(c.pipelines()), |i, j| c.get(i, j).to_string());
    write_rows(path, &header, &rows)
}

/// Reads a labelled square matrix CSV as written above.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let bad = |m: String| Error::Config(format!("{}: {m}", path.display()));
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let labels: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut cells = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.get(0) != labels.get(i).map(String::as_str) || rec.len() != labels.len() + 1 {
            return Err(bad(format!("row {} does not match the header", i + 1)));
        }
        cells.extend(rec.iter().skip(1).map(String::from));
    }
    if cells.len() != labels.len() * labels.len() {
        return Err(bad("matrix is not square".into()));
    }
    Ok((labels, cells))
}

pub fn communities_json(p: &Partition) -> Value {
    let c: Vec<Vec<&str>> = p
        .communities()
        .iter()
        .map(|m| m.iter().map(|&i| p.nodes()[i].as_str()).collect())
        .collect();
    json!(c)
}

pub fn partition_json(p: &Partition, contrast: &str, group_id: &str, seed: u64) -> Value {
    json!({
        "contrast": contrast,
        "group_id": group_id,
        "resolution": p.resolution(),
        "seed": seed,
        "modularity": p.modularity(),
        "n_communities": p.n_communities(),
        "communities": communities_json(p),
    })
}

/// Reads a partition JSON (`communities` as lists of pipeline ids).
pub fn read_partition_json(path: &Path) -> Result<Partition> {
    let v = read_json(path)?;
    partition_from_json(&v).map_err(|e| e.context(path.display().to_string()))
}

pub fn partition_from_json(v: &Value) -> Result<Partition> {
    let bad = |m: &str| Error::Config(format!("partition JSON: {m}"));
    let communities = v
        .get("communities")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing `communities`"))?;
    let mut members: Vec<(PipelineId, usize)> = Vec::new();
    for (k, c) in communities.iter().enumerate() {
        for id in c.as_array().ok_or_else(|| bad("community is not a list"))? {
            let id = id.as_str().ok_or_else(|| bad("pipeline id is not a string"))?;
            members.push((id.parse()?, k));
        }
    }
    members.sort();
    if members.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(bad("pipeline listed twice"));
    }
    let nodes = members.iter().map(|(p, _)| p.to_string()).collect();
    let labels: Vec<usize> = members.iter().map(|(_, k)| *k).collect();
    let modularity = v.get("modularity").and_then(Value::as_f64).unwrap_or(f64::NAN);
    let resolution = v.get("resolution").and_then(Value::as_f64).unwrap_or(1.0);
    Ok(Partition::from_labels(nodes, &labels, modularity, resolution)?)
}

/// One row per (group, pipeline) with the group's community label.
pub fn write_group_partitions_csv(path: &Path, parts: &[Partition], groups: &[String]) -> Result<()> {
    let header = ["group_id", "pipeline", "community", "modularity"].map(String::from);
    let mut rows = Vec::new();
    for (p, g) in parts.iter().zip(groups) {
        for (node, &c) in p.nodes().iter().zip(p.assignment()) {
            rows.push(vec![g.clone(), node.clone(), c.to_string(), num(p.modularity())]);
        }
    }
    write_rows(path, &header, &rows)
}

pub fn write_unstable_pairs_csv(path: &Path, pairs: &[UnstablePair], n_groups: u32) -> Result<()> {
    let header = ["pipeline_a", "pipeline_b", "community", "count", "n_groups"].map(String::from);
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| {
            vec![
                p.a.to_string(),
                p.b.to_string(),
                p.community.to_string(),
                p.count.to_string(),
                n_groups.to_string(),
            ]
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub const FEATURE_HEADER: [&str; 7] = [
    "contrast",
    "pipeline",
    "community",
    "n_active_whole",
    "n_active_roi",
    "z_threshold",
    "q",
];

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let header = FEATURE_HEADER.map(String::from);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.contrast.clone(),
                r.pipeline.to_string(),
                r.community.to_string(),
                r.n_active_whole.to_string(),
                r.n_active_roi.to_string(),
                opt(r.z_threshold),
                num(r.q),
            ]
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// Per-community mean activated-voxel counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunitySummary {
    pub community: usize,
    pub n_pipelines: usize,
    pub mean_active_whole: f64,
    pub mean_active_roi: f64,
}

pub fn summarize(rows: &[FeatureRow]) -> Vec<CommunitySummary> {
    let mut acc: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry(r.community).or_default();
        e.0 += 1;
        e.1 += r.n_active_whole;
        e.2 += r.n_active_roi;
    }
    acc.into_iter()
        .map(|(community, (n, whole, roi))| CommunitySummary {
            community,
            n_pipelines: n,
            mean_active_whole: whole as f64 / n as f64,
            mean_active_roi: roi as f64 / n as f64,
        })
        .collect()
}

/// Table with one column per community and rows `Whole maps` and `ROI`.
pub fn write_summary_csv(path: &Path, summary: &[CommunitySummary]) -> Result<()> {
    let mut header = vec!["row".to_string()];
    header.extend(summary.iter().map(|s| format!("community {}", s.community + 1)));
    let row = |name: &str, f: &dyn Fn(&CommunitySummary) -> f64| {
        let mut r = vec![name.to_string()];
        r.extend(summary.iter().map(|s| num(f(s))));
        r
    };
    let rows = vec![
        row("n_pipelines", &|s| s.n_pipelines as f64),
        row("Whole maps", &|s| s.mean_active_whole),
        row("ROI", &|s| s.mean_active_roi),
    ];
    write_rows(path, &header, &rows)
}

pub fn write_compare_csv(path: &Path, cmp: &CrossContrast) -> Result<()> {
    let header = ["pipeline_a", "pipeline_b", "rate_a", "rate_b", "delta"].map(String::from);
    let rows: Vec<Vec<String>> = cmp
        .pairs
        .iter()
        .map(|p| vec![p.a.to_string(), p.b.to_string(), num(p.rate_a), num(p.rate_b), num(p.delta)])
        .collect();
    write_rows(path, &header, &rows)
}

pub fn compare_json(cmp: &CrossContrast, a: &str, b: &str, pa: &Partition, pb: &Partition) -> Value {
    json!({
        "contrast_a": a,
        "contrast_b": b,
        "ari": cmp.ari,
        "measure": CROSS_CONTRAST_MEASURE,
        "communities_a": communities_json(pa),
        "communities_b": communities_json(pb),
        "top_pairs": cmp.pairs.iter().take(10).map(|p| json!({
            "a": p.a.to_string(),
            "b": p.b.to_string(),
            "rate_a": p.rate_a,
            "rate_b": p.rate_b,
            "delta": p.delta,
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted() {
        let v = json!({"b": 1, "a": {"d": 2, "c": [ {"z": 0, "y": 1} ]}});
        assert_eq!(
            to_json_string(&v).split_whitespace().collect::<String>(),
            r#"{"a":{"c":[{"y":1,"z":0}],"d":2},"b":1}"#
        );
    }

    #[test]
    fn partition_json_round_trip() {
        let nodes: Vec<String> = PipelineId::all()[..4].iter().map(|p| p.to_string()).collect();
        let p = Partition::from_labels(nodes, &[0, 1, 0, 1], 0.25, 1.0).unwrap();
        let v = partition_json(&p, "rh", "global", 3);
        assert_eq!(partition_from_json(&v).unwrap(), p);
    }

    #[test]
    fn summary_means() {
        let id = PipelineId::all();
        let row = |p: usize, community, whole, roi| FeatureRow {
            contrast: "rh".into(),
            pipeline: id[p],
            community,
            n_active_whole: whole,
            n_active_roi: roi,
            z_threshold: None,
            q: 0.05,
        };
        let s = summarize(&[row(0, 0, 10, 2), row(1, 0, 20, 4), row(2, 1, 5, 0)]);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].mean_active_whole, s[0].mean_active_roi), (15.0, 3.0));
        assert_eq!(s[1].n_pipelines, 1);
    }
}
