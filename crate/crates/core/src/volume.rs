//! 3-D scalar volumes with a voxel-to-world affine.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hash::Fnv64;

/// Row-major 4x4 matrix mapping homogeneous voxel indices to world mm.
pub type Affine = [[f64; 4]; 4];

pub const IDENTITY: Affine = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// Scalar grid stored x-fastest: `data[i + nx * (j + ny * k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    affine: Affine,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(dims: [usize; 3], affine: Affine, data: Vec<f64>) -> Result<Self> {
        check_grid(dims, &affine)?;
        let len = voxel_count(dims);
        if data.len() != len {
            return Err(Error::InvalidVolume(alloc::format!(
                "data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        let bad = data.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFiniteData { count: bad });
        }
        Ok(Self { dims, affine, data })
    }

    pub fn filled(dims: [usize; 3], affine: Affine, value: f64) -> Result<Self> {
        Self::new(dims, affine, alloc::vec![value; voxel_count(dims)])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn grid(&self) -> TargetGrid {
        TargetGrid {
            dims: self.dims,
            affine: self.affine,
        }
    }

    pub fn same_grid(&self, other: &Volume) -> bool {
        self.dims == other.dims && self.affine == other.affine
    }

    /// Voxels strictly above 0.5.
    pub fn count_above_half(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.5).count()
    }
}

/// Sampling grid that volumes are resampled onto.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGrid {
    dims: [usize; 3],
    affine: Affine,
}

impl TargetGrid {
    pub fn new(dims: [usize; 3], affine: Affine) -> Result<Self> {
        check_grid(dims, &affine)?;
        invert_affine(&affine)?;
        Ok(Self { dims, affine })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn len(&self) -> usize {
        voxel_count(self.dims)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::new();
        for d in self.dims {
            h.write_u64(d as u64);
        }
        for row in &self.affine {
            for v in row {
                h.write_u64(v.to_bits());
            }
        }
        h.finish()
    }
}

pub(crate) fn voxel_count(dims: [usize; 3]) -> usize {
    dims[0] * dims[1] * dims[2]
}

fn check_grid(dims: [usize; 3], affine: &Affine) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidVolume(alloc::format!("non-positive dims {dims:?}")));
    }
    if affine[3] != [0.0, 0.0, 0.0, 1.0] {
        return Err(Error::InvalidVolume("affine last row must be (0,0,0,1)".into()));
    }
    if affine.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidVolume("affine has non-finite entries".into()));
    }
    Ok(())
}

/// Inverse of an affine with last row (0,0,0,1).
pub fn invert_affine(a: &Affine) -> Result<Affine> {
    let m = [
        [a[0][0], a[0][1], a[0][2]],
        [a[1][0], a[1][1], a[1][2]],
        [a[2][0], a[2][1], a[2][2]],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-12 * scale * scale * scale {
        return Err(Error::SingularAffine);
    }
    let inv_det = 1.0 / det;
    let mut inv = [[0.0; 3]; 3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    let t = [a[0][3], a[1][3], a[2][3]];
    let mut out = IDENTITY;
    for r in 0..3 {
        out[r][..3].copy_from_slice(&inv[r]);
        out[r][3] = -(inv[r][0] * t[0] + inv[r][1] * t[1] + inv[r][2] * t[2]);
    }
    Ok(out)
}

pub fn compose(a: &Affine, b: &Affine) -> Affine {
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn apply(a: &Affine, p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = a[r][0] * p[0] + a[r][1] * p[1] + a[r][2] * p[2] + a[r][3];
    }
    out
}

/// Diagonal voxel-size affine with the given origin (world position of voxel 0).
pub fn scaled_affine(voxel_mm: [f64; 3], origin: [f64; 3]) -> Affine {
    let mut a = IDENTITY;
    for axis in 0..3 {
        a[axis][axis] = voxel_mm[axis];
        a[axis][3] = origin[axis];
    }
    a
}
