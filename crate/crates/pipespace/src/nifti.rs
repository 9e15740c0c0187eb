//! Single-file NIfTI-1 (`n+1`) reader and writer for 3-D volumes.
//!
//! Only the subset needed for statistic maps, masks and atlases is
//! supported: 3-D data, int16/float32/float64 voxels, and an sform affine.
//! Byte order is detected from the header-size field. Files are written
//! little-endian as float32 with the affine in the sform rows.

use std::fs;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use pipespace_core::Volume;

use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DATA_OFFSET: usize = 352;

const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;

/// What to do with NaN voxels on read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NanPolicy {
    /// Replace by 0 (statistic maps carry NaN outside the brain).
    Zero,
    /// Fail with `NonFiniteData` (masks, atlases).
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub volume: Volume,
    /// NaN voxels replaced by 0.
    pub nan_replaced: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    Unsupported(String),
    Truncated,
    NonFinite(usize),
    Invalid(pipespace_core::Error),
}

impl DecodeError {
    fn at(self, path: &Path) -> Error {
        let path = path.to_path_buf();
        match self {
            DecodeError::Unsupported(reason) => Error::UnsupportedFormat { path, reason },
            DecodeError::Truncated => Error::TruncatedFile { path },
            DecodeError::NonFinite(count) => Error::NonFiniteData { path, count },
            DecodeError::Invalid(e) => Error::Core(e).context(path.display().to_string()),
        }
    }
}

pub fn read_volume(path: impl AsRef<Path>, nan: NanPolicy) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = decode(&bytes, nan).map_err(|e| e.at(path))?;
    if decoded.nan_replaced > 0 {
        log::warn!("{}: replaced {} NaN voxels by 0", path.display(), decoded.nan_replaced);
    }
    Ok(decoded.volume)
}

pub fn decode(bytes: &[u8], nan: NanPolicy) -> Result<Decoded, DecodeError> {
    if bytes.len() < HEADER_SIZE {
        return Err(DecodeError::Truncated);
    }
    if LittleEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        decode_with::<LittleEndian>(bytes, nan)
    } else if BigEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        decode_with::<BigEndian>(bytes, nan)
    } else {
        Err(DecodeError::Unsupported("header size is not 348".into()))
    }
}

fn decode_with<B: ByteOrder>(h: &[u8], nan: NanPolicy) -> Result<Decoded, DecodeError> {
    let unsupported = |m: String| Err(DecodeError::Unsupported(m));
    if &h[344..348] != b"n+1\0" {
        return unsupported(format!("magic {:?} is not \"n+1\\0\"", String::from_utf8_lossy(&h[344..348])));
    }
    let dim: Vec<i16> = (0..8).map(|i| B::read_i16(&h[40 + 2 * i..])).collect();
    if dim[0] != 3 {
        return unsupported(format!("dim[0] = {}, only 3-D volumes are supported", dim[0]));
    }
    if dim[1..4].iter().any(|&d| d <= 0) {
        return unsupported(format!("non-positive dims {:?}", &dim[1..4]));
    }
    let dims = [dim[1] as usize, dim[2] as usize, dim[3] as usize];
    let datatype = B::read_i16(&h[70..]);
    let bitpix = B::read_i16(&h[72..]);
    let width = match (datatype, bitpix) {
        (DT_INT16, 16) => 2,
        (DT_FLOAT32, 32) => 4,
        (DT_FLOAT64, 64) => 8,
        _ => return unsupported(format!("datatype {datatype} with bitpix {bitpix}")),
    };
    let vox_offset = B::read_f32(&h[108..]);
    if !(vox_offset >= DATA_OFFSET as f32) || vox_offset.fract() != 0.0 {
        return unsupported(format!("vox_offset {vox_offset}"));
    }
    let sform_code = B::read_i16(&h[254..]);
    if sform_code <= 0 {
        return unsupported("no sform affine (qform-only files are not supported)".into());
    }
    let mut affine = pipespace_core::volume::IDENTITY;
    for (row, base) in [280usize, 296, 312].into_iter().enumerate() {
        for (col, cell) in affine[row].iter_mut().enumerate() {
            *cell = f64::from(B::read_f32(&h[base + 4 * col..]));
        }
    }

    let n: usize = dims.iter().product();
    let start = vox_offset as usize;
    let end = start + n * width;
    if h.len() < end {
        return Err(DecodeError::Truncated);
    }
    let raw = &h[start..end];
    let mut data: Vec<f64> = match datatype {
        DT_INT16 => raw.chunks_exact(2).map(|c| f64::from(B::read_i16(c))).collect(),
        DT_FLOAT32 => raw.chunks_exact(4).map(|c| f64::from(B::read_f32(c))).collect(),
        _ => raw.chunks_exact(8).map(B::read_f64).collect(),
    };

    let slope = B::read_f32(&h[112..]);
    let inter = B::read_f32(&h[116..]);
    if slope != 0.0 && slope.is_finite() && !(slope == 1.0 && inter == 0.0) {
        let (s, b) = (f64::from(slope), f64::from(if inter.is_finite() { inter } else { 0.0 }));
        for v in &mut data {
            *v = *v * s + b;
        }
    }

    let nans = data.iter().filter(|v| v.is_nan()).count();
    let infinite = data.iter().filter(|v| v.is_infinite()).count();
    if infinite > 0 || (nans > 0 && nan == NanPolicy::Reject) {
        return Err(DecodeError::NonFinite(nans + infinite));
    }
    if nans > 0 {
        for v in data.iter_mut().filter(|v| v.is_nan()) {
            *v = 0.0;
        }
    }
    let volume = Volume::new(dims, affine, data).map_err(DecodeError::Invalid)?;
    Ok(Decoded {
        volume,
        nan_replaced: nans,
    })
}

/// Little-endian float32 encoding with the affine in the sform rows.
pub fn encode(v: &Volume) -> Result<Vec<u8>, DecodeError> {
    let dims = v.dims();
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(DecodeError::Unsupported(format!("dims {dims:?} exceed the int16 range")));
    }
    let values: Vec<f32> = v.data().iter().map(|&x| x as f32).collect();
    let overflow = values.iter().filter(|x| !x.is_finite()).count();
    if overflow > 0 {
        return Err(DecodeError::NonFinite(overflow));
    }
    let affine = v.affine();
    let mut h = vec![0u8; DATA_OFFSET + 4 * values.len()];
    LittleEndian::write_i32(&mut h[0..], HEADER_SIZE as i32);
    h[38] = b'r';
    let dim: [i16; 8] = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[40 + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut h[70..], DT_FLOAT32);
    LittleEndian::write_i16(&mut h[72..], 32);
    let mut pixdim = [1.0f32; 8];
    for axis in 0..3 {
        let norm = (0..3).map(|r| affine[r][axis] * affine[r][axis]).sum::<f64>().sqrt();
        pixdim[axis + 1] = norm as f32;
    }
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[76 + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut h[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut h[112..], 1.0);
    LittleEndian::write_f32(&mut h[116..], 0.0);
    // mm, sec
    h[123] = 2 | 8;
    LittleEndian::write_i16(&mut h[252..], 0);
    LittleEndian::write_i16(&mut h[254..], 1);
    for (row, base) in [280usize, 296, 312].into_iter().enumerate() {
        for col in 0..4 {
            LittleEndian::write_f32(&mut h[base + 4 * col..], affine[row][col] as f32);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    for (chunk, x) in h[DATA_OFFSET..].chunks_exact_mut(4).zip(&values) {
        LittleEndian::write_f32(chunk, *x);
    }
    Ok(h)
}

pub fn write_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(v).map_err(|e| e.at(path))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
