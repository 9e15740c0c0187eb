use std::path::PathBuf;

use pipespace::error::Error;
use pipespace::nifti::{decode, encode, read_volume, write_volume, DecodeError, NanPolicy};
use pipespace_core::volume::IDENTITY;
use pipespace_core::Volume;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

const FIXTURE_AFFINE: [[f64; 4]; 4] = [
    [2.0, 0.0, 0.0, -10.0],
    [0.0, 3.0, 0.0, 20.0],
    [0.0, 0.0, 4.0, -30.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// 2x2x2 float32 volume with values 0..7, written one header field at a
/// time from the NIfTI-1 layout.
fn hand_assembled() -> Vec<u8> {
    let mut b = vec![0u8; 352 + 8 * 4];
    b[0..4].copy_from_slice(&348i32.to_le_bytes());
    for (i, d) in [3i16, 2, 2, 2, 1, 1, 1, 1].iter().enumerate() {
        b[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    b[70..72].copy_from_slice(&16i16.to_le_bytes());
    b[72..74].copy_from_slice(&32i16.to_le_bytes());
    for i in 0..8 {
        b[76 + 4 * i..80 + 4 * i].copy_from_slice(&1.0f32.to_le_bytes());
    }
    b[108..112].copy_from_slice(&352.0f32.to_le_bytes());
    b[112..116].copy_from_slice(&1.0f32.to_le_bytes());
    b[254..256].copy_from_slice(&1i16.to_le_bytes());
    for (row, base) in [280usize, 296, 312].into_iter().enumerate() {
        for col in 0..4 {
            let v = IDENTITY[row][col] as f32;
            b[base + 4 * col..base + 4 * col + 4].copy_from_slice(&v.to_le_bytes());
        }
    }
    b[344..348].copy_from_slice(b"n+1\0");
    for v in 0..8 {
        b[352 + 4 * v..356 + 4 * v].copy_from_slice(&(v as f32).to_le_bytes());
    }
    b
}

#[test]
fn hand_assembled_float32() {
    let d = decode(&hand_assembled(), NanPolicy::Reject).unwrap();
    assert_eq!(d.volume.dims(), [2, 2, 2]);
    assert_eq!(d.volume.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    assert_eq!(d.volume.affine(), &IDENTITY);
    // x-fastest: value 1 sits at (1, 0, 0), value 2 at (0, 1, 0)
    assert_eq!(d.volume.get(1, 0, 0), 1.0);
    assert_eq!(d.volume.get(0, 1, 0), 2.0);
    assert_eq!(d.volume.get(0, 0, 1), 4.0);
}

#[test]
fn reference_writer_files() {
    let f32le = read_volume(fixture("nib_f32_le.nii"), NanPolicy::Reject).unwrap();
    assert_eq!(f32le.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    assert_eq!(f32le.affine(), &FIXTURE_AFFINE);

    // big-endian int16 with scl_slope 0.5, scl_inter 1
    let i16be = read_volume(fixture("nib_i16_be_scaled.nii"), NanPolicy::Reject).unwrap();
    assert_eq!(i16be.data(), &[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]);
    assert_eq!(i16be.affine(), &FIXTURE_AFFINE);

    let f64le = read_volume(fixture("nib_f64_le.nii"), NanPolicy::Reject).unwrap();
    let expected: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
    assert_eq!(f64le.data(), expected.as_slice());
}

#[test]
fn writer_agrees_with_hand_layout() {
    let v = decode(&hand_assembled(), NanPolicy::Reject).unwrap().volume;
    let ours = encode(&v).unwrap();
    let hand = hand_assembled();
    assert_eq!(ours.len(), hand.len());
    for range in [0..4, 40..56, 70..74, 108..120, 254..256, 280..328, 344..348, 352..384] {
        assert_eq!(ours[range.clone()], hand[range.clone()], "bytes {range:?}");
    }
}

#[test]
fn unit_volume_file_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.nii");
    let v = Volume::new([1, 1, 1], IDENTITY, vec![3.5]).unwrap();
    write_volume(&v, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 352 + 4);
    assert_eq!(read_volume(&path, NanPolicy::Reject).unwrap(), v);
}

#[test]
fn rejected_variants() {
    let mut b = hand_assembled();
    b[344..348].copy_from_slice(b"ni1\0");
    assert!(matches!(decode(&b, NanPolicy::Zero), Err(DecodeError::Unsupported(_))));

    let mut b = hand_assembled();
    b[70..72].copy_from_slice(&2i16.to_le_bytes());
    b[72..74].copy_from_slice(&8i16.to_le_bytes());
    assert!(matches!(decode(&b, NanPolicy::Zero), Err(DecodeError::Unsupported(_))));

    let mut b = hand_assembled();
    b[40..42].copy_from_slice(&4i16.to_le_bytes());
    assert!(matches!(decode(&b, NanPolicy::Zero), Err(DecodeError::Unsupported(_))));

    let b = hand_assembled();
    assert_eq!(decode(&b[..370], NanPolicy::Zero), Err(DecodeError::Truncated));

    let mut b = hand_assembled();
    b[352..356].copy_from_slice(&f32::INFINITY.to_le_bytes());
    assert_eq!(decode(&b, NanPolicy::Zero), Err(DecodeError::NonFinite(1)));
}

#[test]
fn read_errors_carry_the_path() {
    let missing = fixture("does_not_exist.nii");
    let err = read_volume(&missing, NanPolicy::Zero).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("does_not_exist.nii"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.nii");
    std::fs::write(&path, &hand_assembled()[..360]).unwrap();
    let err = read_volume(&path, NanPolicy::Zero).unwrap_err();
    assert!(matches!(err, Error::TruncatedFile { .. }));
}

fn f32_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e30f32..1e30f32, n).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_exact(
        dims in (1usize..5, 1usize..5, 1usize..5),
        seed_data in f32_values(64),
        diag in prop::array::uniform3(0.5f32..4.0),
        offset in prop::array::uniform3(-100f32..100.0),
    ) {
        let dims = [dims.0, dims.1, dims.2];
        let n = dims.iter().product::<usize>();
        let mut affine = IDENTITY;
        for a in 0..3 {
            affine[a][a] = f64::from(diag[a]);
            affine[a][3] = f64::from(offset[a]);
        }
        let v = Volume::new(dims, affine, seed_data[..n].to_vec()).unwrap();
        let back = decode(&encode(&v).unwrap(), NanPolicy::Reject).unwrap().volume;
        prop_assert_eq!(back, v);
    }
}
