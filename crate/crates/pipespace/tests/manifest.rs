mod common;

use common::{dataset, field, pid, volume};
use pipespace::error::Error;
use pipespace::manifest::read_manifest;
use pipespace::synth::generate;
use pipespace_core::synth::{Planting, SynthConfig, SynthContrast};

#[test]
fn small_rectangular_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let maps: Vec<_> = [("g1", "fsl,5,0,0"), ("g1", "spm,5,0,0"), ("g2", "fsl,5,0,0"), ("g2", "spm,5,0,0")]
        .iter()
        .enumerate()
        .map(|(i, (g, p))| ("rh", *g, pid(p), volume([2, 2, 2], field(8, i as u64))))
        .collect();
    let manifest = dataset(dir.path(), &maps);
    let idx = read_manifest(&manifest).unwrap();
    assert_eq!(idx.len(), 4);
    assert_eq!(idx.contrasts(), ["rh"]);
    assert_eq!(idx.groups(), ["g1", "g2"]);
    assert_eq!(idx.pipelines().len(), 2);
    // relative paths resolve against the manifest directory
    let p = idx.path("rh", "g2", pid("spm,5,0,0")).unwrap();
    assert!(p.starts_with(dir.path()) && p.exists());
}

#[test]
fn deleted_row_names_the_missing_triple() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.csv");
    std::fs::write(
        &path,
        "contrast,group_id,pipeline_id,path\n\
         rh,g1,\"fsl,5,0,0\",a.nii\n\
         rh,g1,\"spm,5,0,0\",b.nii\n\
         rh,g2,\"fsl,5,0,0\",c.nii\n",
    )
    .unwrap();
    let err = read_manifest(&path).unwrap_err();
    match &err {
        Error::NonRectangularDataset { missing } => {
            assert_eq!(missing, &vec![("rh".to_string(), "g2".to_string(), "spm,5,0,0".to_string())]);
        }
        other => panic!("unexpected {other}"),
    }
    assert!(err.to_string().contains("(rh, g2, spm,5,0,0)"));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn malformed_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.csv");
    let cases = [
        "contrast,group,pipeline_id,path\nrh,g1,\"fsl,5,0,0\",a.nii\n",
        "contrast,group_id,pipeline_id,path\nrh,g1,\"fsl,7,0,0\",a.nii\n",
        "contrast,group_id,pipeline_id,path\nrh,g1,\"fsl,5,0,0\",a.nii\nrh,g1,fsl-5-0-0,b.nii\n",
        "contrast,group_id,pipeline_id,path\n",
    ];
    for text in cases {
        std::fs::write(&path, text).unwrap();
        assert!(
            matches!(read_manifest(&path), Err(Error::MalformedManifest(_))),
            "accepted {text:?}"
        );
    }
}

#[test]
fn hyphenated_ids_and_whitespace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.csv");
    std::fs::write(
        &path,
        "contrast,group_id,pipeline_id,path\nrh, g1 ,spm-5-0-0,a.nii\nrh,g1,\"fsl, 8, 0, 0\",b.nii\n",
    )
    .unwrap();
    let idx = read_manifest(&path).unwrap();
    let ids: Vec<String> = idx.pipelines().iter().map(|p| p.to_string()).collect();
    assert_eq!(ids, ["fsl,8,0,0", "spm,5,0,0"]);
    assert_eq!(idx.groups(), ["g1"]);
}

#[test]
fn synth_manifest_has_144_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        dims: [4, 4, 4],
        n_groups: 3,
        contrasts: vec![
            SynthContrast {
                name: "left-hand".into(),
                planting: Planting::SoftwareHrf,
            },
            SynthContrast {
                name: "right-hand".into(),
                planting: Planting::FslHrf,
            },
        ],
        ..SynthConfig::default()
    };
    let g = generate(&cfg, dir.path()).unwrap();
    let idx = read_manifest(&g.manifest).unwrap();
    assert_eq!(idx.len(), 144);
    assert_eq!(idx.len(), idx.contrasts().len() * idx.groups().len() * idx.pipelines().len());
    assert_eq!(idx.groups(), ["g001", "g002", "g003"]);
    assert!(idx.entries().iter().all(|e| e.path.exists()));
}
