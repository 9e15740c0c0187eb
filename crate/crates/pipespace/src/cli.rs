//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pipespace_core::resample::unmask;
use pipespace_core::stability::{cross_contrast, default_instability_threshold, stability_flags, PartitionParams};
use pipespace_core::synth::SynthConfig;
use pipespace_core::{Partition, PipelineId, SimilarityMatrix};
use serde_json::json;

use crate::config::{parse_list, ConfigFile, KeyValues};
use crate::error::{Error, Result};
use crate::manifest::read_manifest;
use crate::nifti::write_volume;
use crate::report::{self, Z_ASSUMPTION};
use crate::svg::{block_order, write_heatmap, Annotation, ColorScale, Heatmap};
use crate::synth::{apply_synth_keys, generate, synth_config};
use crate::workflow::{community_features, run_stability, GridSpec, MaskSpec, StabilityRun, Workspace};

#[derive(Debug, Parser)]
#[command(name = "pipespace", version, about = "Similarity and stability of analysis-pipeline outputs")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-group and mean Pearson similarity matrices.
    Correlate(CommonArgs),
    /// Co-occurrence stability matrix and global communities.
    Stability(StabilityArgs),
    /// Thresholded activation counts per pipeline and community.
    Features(FeaturesArgs),
    /// Compare the global communities of two contrasts.
    Compare(CompareArgs),
    /// Generate a synthetic dataset with planted communities.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// INI run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Contrast to analyse (repeatable; default all).
    #[arg(long = "contrast")]
    pub contrasts: Vec<String>,
    /// Louvain resolution.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// FDR level.
    #[arg(long)]
    pub q: Option<f64>,
    /// Worker threads (0 = all cores). Never changes outputs.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Brain mask volume, or `auto` for the intersection of map supports.
    #[arg(long)]
    pub mask: Option<String>,
    /// Resample everything onto the grid of this volume.
    #[arg(long)]
    pub grid_like: Option<PathBuf>,
    /// Fail on negative correlations instead of clamping them to 0.
    #[arg(long)]
    pub strict_negative: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Flag same-community pairs co-occurring in fewer groups than this
    /// (default: half the groups).
    #[arg(long)]
    pub instability_threshold: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Partition JSON (e.g. a `global_partition.json`); computed when absent.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Probabilistic atlas defining the ROI.
    #[arg(long)]
    pub atlas: Option<PathBuf>,
    #[arg(long)]
    pub roi_threshold: Option<f64>,
    /// Also write mean and thresholded maps as volumes.
    #[arg(long)]
    pub write_maps: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub contrast_a: Option<String>,
    #[arg(long)]
    pub contrast_b: Option<String>,
    /// Manifest holding contrast B (default: `--manifest`).
    #[arg(long)]
    pub manifest_b: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// INI file with `[synth]` and `[contrast NAME]` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_groups: Option<usize>,
    /// `N` or `X,Y,Z`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Any `[synth]` key as KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

const RUN_KEYS: [&str; 18] = [
    "manifest",
    "contrast",
    "gamma",
    "seed",
    "q",
    "jobs",
    "out",
    "mask",
    "grid_like",
    "clamp_negative",
    "instability_threshold",
    "partition",
    "atlas",
    "roi_threshold",
    "write_maps",
    "contrast_a",
    "contrast_b",
    "manifest_b",
];

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub contrasts: Vec<String>,
    pub grid_like: Option<PathBuf>,
    pub mask: MaskSpec,
    pub gamma: f64,
    pub seed: u64,
    pub q: f64,
    pub clamp_negative: bool,
    pub jobs: usize,
    pub out: PathBuf,
}

impl RunConfig {
    fn partition_params(&self) -> PartitionParams {
        PartitionParams {
            resolution: self.gamma,
            seed: self.seed,
            clamp_negative: self.clamp_negative,
        }
    }

    fn grid(&self) -> GridSpec {
        match &self.grid_like {
            Some(p) => GridSpec::Like(p.clone()),
            None => GridSpec::FirstVolume,
        }
    }

    /// Run record; excludes `jobs`, which never affects outputs.
    fn record(&self, extra: &[(&str, String)]) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        line("manifest", self.manifest.display().to_string());
        line("contrast", self.contrasts.join(","));
        line("gamma", self.gamma.to_string());
        line("seed", self.seed.to_string());
        line("q", self.q.to_string());
        line("clamp_negative", self.clamp_negative.to_string());
        line(
            "mask",
            match &self.mask {
                MaskSpec::Auto => "auto".into(),
                MaskSpec::File(p) => p.display().to_string(),
            },
        );
        if let Some(g) = &self.grid_like {
            line("grid_like", g.display().to_string());
        }
        for (k, v) in extra {
            line(k, v.clone());
        }
        s
    }
}

/// Config file keys plus the directory that relative paths resolve against.
struct FileKeys {
    kv: KeyValues,
    base: PathBuf,
}

impl FileKeys {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self {
                kv: KeyValues::default(),
                base: PathBuf::new(),
            }),
            Some(p) => {
                let file = ConfigFile::load(p)?;
                file.run.check_keys(&RUN_KEYS, &p.display().to_string())?;
                Ok(Self {
                    kv: file.run,
                    base: p.parent().unwrap_or(Path::new("")).to_path_buf(),
                })
            }
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.kv.get_str(key).map(|v| self.base.join(v))
    }
}

fn resolve(common: &CommonArgs, file: &FileKeys) -> Result<RunConfig> {
    let kv = &file.kv;
    let manifest = common
        .manifest
        .clone()
        .or_else(|| file.path("manifest"))
        .ok_or_else(|| Error::Config("--manifest is required".into()))?;
    let contrasts = if common.contrasts.is_empty() {
        kv.get_str("contrast").map(|c| parse_list(c, "contrast")).transpose()?.unwrap_or_default()
    } else {
        common.contrasts.clone()
    };
    let mask = match common.mask.clone().or_else(|| {
        kv.get_str("mask")
            .map(|m| if m == "auto" { m.to_string() } else { file.base.join(m).display().to_string() })
    }) {
        None => MaskSpec::Auto,
        Some(m) if m == "auto" => MaskSpec::Auto,
        Some(m) => MaskSpec::File(m.into()),
    };
    let gamma = common.gamma.or(kv.get("gamma")?).unwrap_or(1.0);
    let q = common.q.or(kv.get("q")?).unwrap_or(0.05);
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!("q must be in (0, 1), got {q}")));
    }
    let clamp_negative = if common.strict_negative {
        false
    } else {
        kv.get("clamp_negative")?.unwrap_or(true)
    };
    Ok(RunConfig {
        manifest,
        contrasts,
        grid_like: common.grid_like.clone().or_else(|| file.path("grid_like")),
        mask,
        gamma,
        seed: common.seed.or(kv.get("seed")?).unwrap_or(0),
        q,
        clamp_negative,
        jobs: common.jobs.or(kv.get("jobs")?).unwrap_or(0),
        out: common.out.clone().or_else(|| file.path("out")).unwrap_or_else(|| "pipespace-out".into()),
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dir_name(s: &str) -> String {
    s.chars().map(|c| if matches!(c, '/' | '\\' | '\0') { '_' } else { c }).collect()
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(f)
}

fn open_workspace(cfg: &RunConfig, manifest: &Path, contrasts: &[String]) -> Result<Workspace> {
    let index = read_manifest(manifest)?;
    Workspace::open(index, &cfg.grid(), &cfg.mask, contrasts)
}

fn selected(cfg: &RunConfig, ws: &Workspace) -> Vec<String> {
    if cfg.contrasts.is_empty() {
        ws.index().contrasts().to_vec()
    } else {
        cfg.contrasts.clone()
    }
}

fn labels(p: &[PipelineId]) -> Vec<String> {
    p.iter().map(|id| id.to_string()).collect()
}

fn similarity_heatmap(path: &Path, m: &SimilarityMatrix, title: &str, blocks: Option<&[usize]>) -> Result<()> {
    let l = labels(m.pipelines());
    let order = blocks.map(block_order).unwrap_or_default();
    write_heatmap(
        &Heatmap {
            title,
            labels: &l,
            values: m.values(),
            scale: ColorScale::fit(m.values()),
            annotation: Annotation::Decimal,
            order: &order,
            blocks,
        },
        path,
    )
}

pub fn cmd_correlate(common: &CommonArgs) -> Result<()> {
    let file = FileKeys::load(common.config.as_deref())?;
    let cfg = resolve(common, &file)?;
    with_pool(cfg.jobs, || {
        let ws = open_workspace(&cfg, &cfg.manifest, &cfg.contrasts)?;
        create_dir(&cfg.out)?;
        for contrast in selected(&cfg, &ws) {
            let dir = cfg.out.join(dir_name(&contrast));
            let groups_dir = dir.join("similarity");
            create_dir(&groups_dir)?;
            let mats = ws.similarities(&contrast)?;
            for m in &mats {
                report::write_similarity_csv(&groups_dir.join(format!("{}.csv", dir_name(m.group_id()))), m)?;
            }
            let mean = pipespace_core::mean_similarity(&mats)?;
            report::write_similarity_csv(&dir.join("mean_similarity.csv"), &mean)?;
            similarity_heatmap(
                &dir.join("mean_similarity.svg"),
                &mean,
                &format!("{contrast}: mean correlation across {} groups", mats.len()),
                None,
            )?;
            log::info!("{contrast}: {} groups, {} voxels", mats.len(), mean.n_voxels());
        }
        write_text(&cfg.out.join("correlate_run.ini"), &cfg.record(&[]))
    })
}

fn stability_outputs(dir: &Path, contrast: &str, run: &StabilityRun, ws: &Workspace, cfg: &RunConfig, threshold: u32) -> Result<()> {
    create_dir(dir)?;
    let report = &run.report;
    let c = &report.cooccurrence;
    let global = &report.global_partition;
    let names = c.labels();
    let blocks = global.aligned_to(&names)?;
    let order = block_order(&blocks);
    let counts: Vec<f64> = c.counts().iter().map(|&x| f64::from(x)).collect();
    report::write_cooccurrence_csv(&dir.join("cooccurrence.csv"), c)?;
    write_heatmap(
        &Heatmap {
            title: &format!("{contrast}: same-community counts over {} groups", c.n_groups()),
            labels: &names,
            values: &counts,
            scale: ColorScale {
                min: 0.0,
                max: f64::from(c.n_groups()),
            },
            annotation: Annotation::Integer,
            order: &order,
            blocks: Some(&blocks),
        },
        &dir.join("cooccurrence.svg"),
    )?;
    report::write_similarity_csv(&dir.join("mean_similarity.csv"), &report.mean_similarity)?;
    similarity_heatmap(
        &dir.join("mean_similarity.svg"),
        &report.mean_similarity,
        &format!("{contrast}: mean correlation across {} groups", c.n_groups()),
        Some(&blocks),
    )?;
    report::write_json(
        &dir.join("global_partition.json"),
        &report::partition_json(global, contrast, "global", cfg.seed),
    )?;
    report::write_group_partitions_csv(&dir.join("group_partitions.csv"), &run.group_partitions, ws.groups())?;
    let flags = stability_flags(c, global, threshold)?;
    report::write_unstable_pairs_csv(&dir.join("unstable_pairs.csv"), &flags, c.n_groups())?;
    let modularities: Vec<f64> = run.group_partitions.iter().map(Partition::modularity).collect();
    let mean_q = modularities.iter().sum::<f64>() / modularities.len() as f64;
    let summary = json!({
        "contrast": contrast,
        "n_groups": c.n_groups(),
        "n_pipelines": c.len(),
        "n_voxels": report.mean_similarity.n_voxels(),
        "resolution": cfg.gamma,
        "seed": cfg.seed,
        "clamp_negative": cfg.clamp_negative,
        "clamped_negative_correlations": run.clamped,
        "instability_threshold": threshold,
        "n_unstable_pairs": flags.len(),
        "mean_group_modularity": mean_q,
        "global_partition": report::partition_json(global, contrast, "global", cfg.seed),
        "assumption": Z_ASSUMPTION,
    });
    report::write_json(&dir.join("stability_report.json"), &summary)?;
    log::info!(
        "{contrast}: {} global communities, Q = {:.4}, {} unstable pairs",
        global.n_communities(),
        global.modularity(),
        flags.len()
    );
    Ok(())
}

pub fn cmd_stability(args: &StabilityArgs) -> Result<()> {
    let file = FileKeys::load(args.common.config.as_deref())?;
    let cfg = resolve(&args.common, &file)?;
    let threshold_arg = args.instability_threshold.or(file.kv.get("instability_threshold")?);
    with_pool(cfg.jobs, || {
        let ws = open_workspace(&cfg, &cfg.manifest, &cfg.contrasts)?;
        let n_groups = ws.groups().len() as u32;
        let threshold = threshold_arg.unwrap_or_else(|| default_instability_threshold(n_groups));
        if threshold > n_groups {
            return Err(Error::Config(format!(
                "instability threshold {threshold} exceeds the {n_groups} groups"
            )));
        }
        create_dir(&cfg.out)?;
        for contrast in selected(&cfg, &ws) {
            let run = run_stability(&ws, &contrast, &cfg.partition_params())?;
            stability_outputs(&cfg.out.join(dir_name(&contrast)), &contrast, &run, &ws, &cfg, threshold)?;
        }
        write_text(
            &cfg.out.join("stability_run.ini"),
            &cfg.record(&[("instability_threshold", threshold.to_string())]),
        )
    })
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let file = FileKeys::load(args.common.config.as_deref())?;
    let cfg = resolve(&args.common, &file)?;
    let partition_path = args.partition.clone().or_else(|| file.path("partition"));
    let atlas = args.atlas.clone().or_else(|| file.path("atlas"));
    let roi_threshold = args.roi_threshold.or(file.kv.get("roi_threshold")?).unwrap_or(0.5);
    let write_maps = args.write_maps || file.kv.get("write_maps")?.unwrap_or(false);
    let given = partition_path.as_deref().map(report::read_partition_json).transpose()?;
    with_pool(cfg.jobs, || {
        let ws = open_workspace(&cfg, &cfg.manifest, &cfg.contrasts)?;
        let roi = atlas.as_deref().map(|a| ws.roi_vector(a, roi_threshold)).transpose()?;
        create_dir(&cfg.out)?;
        for contrast in selected(&cfg, &ws) {
            let partition = match &given {
                Some(p) => p.clone(),
                None => run_stability(&ws, &contrast, &cfg.partition_params())?.report.global_partition,
            };
            let run = community_features(&ws, &contrast, &partition, roi.as_ref(), cfg.q)?;
            let dir = cfg.out.join(dir_name(&contrast));
            create_dir(&dir)?;
            report::write_features_csv(&dir.join("features.csv"), &run.rows)?;
            let summary = report::summarize(&run.rows);
            report::write_summary_csv(&dir.join("features_summary.csv"), &summary)?;
            report::write_json(
                &dir.join("features.json"),
                &json!({
                    "contrast": contrast,
                    "q": cfg.q,
                    "correction": "Benjamini-Hochberg",
                    "assumption": Z_ASSUMPTION,
                    "roi": atlas.as_ref().map(|a| a.display().to_string()),
                    "roi_threshold": roi_threshold,
                    "roi_voxels": roi.as_ref().map(|r| r.values().iter().filter(|&&v| v > 0.5).count()),
                    "n_voxels": ws.mask().count_above_half(),
                    "communities": report::communities_json(&partition),
                    "summary": summary.iter().map(|s| json!({
                        "community": s.community,
                        "n_pipelines": s.n_pipelines,
                        "mean_active_whole": s.mean_active_whole,
                        "mean_active_roi": s.mean_active_roi,
                    })).collect::<Vec<_>>(),
                }),
            )?;
            if write_maps {
                let maps = dir.join("maps");
                create_dir(&maps)?;
                for (p, mean) in &run.means {
                    write_volume(&unmask(mean, ws.mask())?, maps.join(format!("{}_mean.nii", p.hyphenated())))?;
                }
                for (row, active) in run.rows.iter().zip(&run.active) {
                    let name = format!("{}_active.nii", row.pipeline.hyphenated());
                    write_volume(&unmask(active, ws.mask())?, maps.join(name))?;
                }
            }
        }
        let mut extra = vec![("roi_threshold", roi_threshold.to_string())];
        if let Some(p) = &partition_path {
            extra.push(("partition", p.display().to_string()));
        }
        if let Some(a) = &atlas {
            extra.push(("atlas", a.display().to_string()));
        }
        write_text(&cfg.out.join("features_run.ini"), &cfg.record(&extra))
    })
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let file = FileKeys::load(args.common.config.as_deref())?;
    let cfg = resolve(&args.common, &file)?;
    let manifest_b = args.manifest_b.clone().or_else(|| file.path("manifest_b"));
    let a_arg = args.contrast_a.clone().or_else(|| file.kv.get_str("contrast_a").map(String::from));
    let b_arg = args.contrast_b.clone().or_else(|| file.kv.get_str("contrast_b").map(String::from));
    with_pool(cfg.jobs, || {
        let index_a = read_manifest(&cfg.manifest)?;
        let index_b = match &manifest_b {
            Some(m) => read_manifest(m)?,
            None => index_a.clone(),
        };
        let a = match a_arg.clone() {
            Some(a) => a,
            None => index_a.contrasts()[0].clone(),
        };
        let b = match b_arg.clone() {
            Some(b) => b,
            None if manifest_b.is_some() => index_b.contrasts()[0].clone(),
            None => index_a
                .contrasts()
                .get(1)
                .cloned()
                .ok_or_else(|| Error::Config("compare needs two contrasts (--contrast-a, --contrast-b)".into()))?,
        };
        let ws_a = Workspace::open(index_a, &cfg.grid(), &cfg.mask, std::slice::from_ref(&a))?;
        let ws_b = if manifest_b.is_some() {
            Workspace::open(index_b, &cfg.grid(), &cfg.mask, std::slice::from_ref(&b))?
        } else {
            Workspace::open(index_b, &cfg.grid(), &cfg.mask, &[a.clone(), b.clone()])?
        };
        let params = cfg.partition_params();
        let run_a = run_stability(&ws_a, &a, &params)?;
        let run_b = run_stability(&ws_b, &b, &params)?;
        let cmp = cross_contrast(&run_a.report, &run_b.report).map_err(|e| {
            Error::Core(e).context(format!("comparing contrast {a} with contrast {b}"))
        })?;
        create_dir(&cfg.out)?;
        report::write_compare_csv(&cfg.out.join("compare_pairs.csv"), &cmp)?;
        report::write_json(
            &cfg.out.join("compare.json"),
            &report::compare_json(
                &cmp,
                &a,
                &b,
                &run_a.report.global_partition,
                &run_b.report.global_partition,
            ),
        )?;
        log::info!("ARI({a}, {b}) = {:.4}", cmp.ari);
        let mut extra = vec![("contrast_a", a.clone()), ("contrast_b", b.clone())];
        if let Some(m) = &manifest_b {
            extra.push(("manifest_b", m.display().to_string()));
        }
        write_text(&cfg.out.join("compare_run.ini"), &cfg.record(&extra))
    })
}

pub fn resolve_synth(args: &SynthArgs) -> Result<SynthConfig> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut cfg = synth_config(&file)?;
    let mut overrides = KeyValues::default();
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        overrides.set(k.trim(), v.trim());
    }
    if let Some(s) = args.seed {
        overrides.set("seed", &s.to_string());
    }
    if let Some(n) = args.n_groups {
        overrides.set("n_groups", &n.to_string());
    }
    if let Some(d) = &args.dims {
        overrides.set("dims", d);
    }
    apply_synth_keys(&mut cfg, &overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = resolve_synth(args)?;
    with_pool(args.jobs.unwrap_or(0), || {
        create_dir(&args.out)?;
        let g = generate(&cfg, &args.out)?;
        log::info!("wrote {} maps and {}", g.n_files, g.manifest.display());
        Ok(())
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Correlate(a) => cmd_correlate(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Features(a) => cmd_features(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
