//! Resampling onto a common grid, mask intersection and mask application.
//!
//! Both interpolators work in source voxel space: the target affine is
//! composed once with the inverse source affine, and every target voxel
//! index goes through that single matrix. Samples that fall outside the
//! source grid are 0.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::volume::{apply, compose, invert_affine, Affine, TargetGrid, Volume};

// Coordinates this close to an integer are snapped to it, so that grids that
// coincide with the source up to affine round-off sample exactly.
const SNAP: f64 = 1e-9;

/// Values of a volume restricted to a mask, in x-fastest voxel order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    values: Vec<f64>,
    mask_hash: u64,
}

impl MaskedVector {
    pub fn new(values: Vec<f64>, mask_hash: u64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values, mask_hash })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_voxels(&self) -> usize {
        self.values.len()
    }

    pub fn mask_hash(&self) -> u64 {
        self.mask_hash
    }
}

fn snap(x: f64) -> f64 {
    let r = libm::round(x);
    if (x - r).abs() < SNAP {
        r
    } else {
        x
    }
}

fn voxel_to_source(v: &Volume, g: &TargetGrid) -> Result<Affine> {
    let inv = invert_affine(v.affine())?;
    invert_affine(g.affine())?;
    Ok(compose(&inv, g.affine()))
}

fn map_grid(g: &TargetGrid, mut sample: impl FnMut([f64; 3]) -> f64, t: &Affine) -> Vec<f64> {
    let [nx, ny, nz] = g.dims();
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = apply(t, [i as f64, j as f64, k as f64]);
                out.push(sample([snap(p[0]), snap(p[1]), snap(p[2])]));
            }
        }
    }
    out
}

/// Trilinear interpolation onto `g`.
pub fn resample_continuous(v: &Volume, g: &TargetGrid) -> Result<Volume> {
    let t = voxel_to_source(v, g)?;
    if v.dims() == g.dims() && v.affine() == g.affine() {
        return Ok(v.clone());
    }
    let dims = v.dims();
    let data = map_grid(
        g,
        |p| {
            let mut base = [0usize; 3];
            let mut frac = [0.0f64; 3];
            for axis in 0..3 {
                let hi = (dims[axis] - 1) as f64;
                if !(p[axis] >= 0.0 && p[axis] <= hi) {
                    return 0.0;
                }
                let f = libm::floor(p[axis]);
                base[axis] = f as usize;
                frac[axis] = p[axis] - f;
            }
            let mut acc = 0.0;
            for corner in 0..8usize {
                let mut w = 1.0;
                let mut idx = [0usize; 3];
                for axis in 0..3 {
                    let upper = (corner >> axis) & 1 == 1;
                    if upper {
                        w *= frac[axis];
                        idx[axis] = (base[axis] + 1).min(dims[axis] - 1);
                    } else {
                        w *= 1.0 - frac[axis];
                        idx[axis] = base[axis];
                    }
                }
                if w != 0.0 {
                    acc += w * v.get(idx[0], idx[1], idx[2]);
                }
            }
            acc
        },
        &t,
    );
    Volume::new(g.dims(), *g.affine(), data)
}

/// Nearest-neighbour resampling onto `g`; exact ties go to the lower index.
pub fn resample_nearest(v: &Volume, g: &TargetGrid) -> Result<Volume> {
    let t = voxel_to_source(v, g)?;
    if v.dims() == g.dims() && v.affine() == g.affine() {
        return Ok(v.clone());
    }
    let dims = v.dims();
    let data = map_grid(
        g,
        |p| {
            let mut idx = [0usize; 3];
            for axis in 0..3 {
                let n = libm::ceil(p[axis] - 0.5);
                if !(n >= 0.0 && n <= (dims[axis] - 1) as f64) {
                    return 0.0;
                }
                idx[axis] = n as usize;
            }
            v.get(idx[0], idx[1], idx[2])
        },
        &t,
    );
    Volume::new(g.dims(), *g.affine(), data)
}

/// Voxelwise AND of masks binarized at > 0.5.
///
/// An empty result is returned as-is; callers decide whether to warn.
/// [`apply_mask`] rejects it with [`Error::EmptyIntersection`].
pub fn intersect_masks(masks: &[Volume]) -> Result<Volume> {
    let first = masks.first().ok_or(Error::EmptyMaskList)?;
    if masks.iter().any(|m| !m.same_grid(first)) {
        return Err(Error::GridMismatch);
    }
    let data = (0..first.len())
        .map(|i| {
            if masks.iter().all(|m| m.data()[i] > 0.5) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Volume::new(first.dims(), *first.affine(), data)
}

/// Stable digest of a mask: grid plus the set of selected voxels.
pub fn mask_digest(mask: &Volume) -> u64 {
    let mut h = Fnv64::new();
    h.write_u64(mask.grid().digest());
    for (i, &m) in mask.data().iter().enumerate() {
        if m > 0.5 {
            h.write_u64(i as u64);
        }
    }
    h.finish()
}

pub fn apply_mask(v: &Volume, mask: &Volume) -> Result<MaskedVector> {
    if !v.same_grid(mask) {
        return Err(Error::GridMismatch);
    }
    let values: Vec<f64> = v
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m > 0.5)
        .map(|(&x, _)| x)
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(MaskedVector {
        values,
        mask_hash: mask_digest(mask),
    })
}

/// Scatters masked values back onto the mask's grid (0 outside the mask).
pub fn unmask(values: &MaskedVector, mask: &Volume) -> Result<Volume> {
    if values.mask_hash != mask_digest(mask) {
        return Err(Error::MaskMismatch);
    }
    let mut it = values.values.iter();
    let data = mask
        .data()
        .iter()
        .map(|&m| if m > 0.5 { *it.next().unwrap_or(&0.0) } else { 0.0 })
        .collect();
    Volume::new(mask.dims(), *mask.affine(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{scaled_affine, IDENTITY};
    use alloc::vec;

    fn ramp_x(n: usize) -> Volume {
        let mut data = Vec::new();
        for _k in 0..n {
            for _j in 0..n {
                for i in 0..n {
                    data.push(i as f64);
                }
            }
        }
        Volume::new([n, n, n], IDENTITY, data).unwrap()
    }

    #[test]
    fn identity_grid_is_identity() {
        let v = ramp_x(4);
        assert_eq!(resample_continuous(&v, &v.grid()).unwrap(), v);
        assert_eq!(resample_nearest(&v, &v.grid()).unwrap(), v);
    }

    #[test]
    fn half_voxel_shift_reproduces_linear_ramp() {
        let v = ramp_x(4);
        let g = TargetGrid::new([4, 4, 4], scaled_affine([1.0; 3], [0.5, 0.0, 0.0])).unwrap();
        let out = resample_continuous(&v, &g).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..3 {
                    assert_eq!(out.get(i, j, k), i as f64 + 0.5);
                }
                // x = 3.5 lies outside the source hull
                assert_eq!(out.get(3, j, k), 0.0);
            }
        }
    }

    #[test]
    fn constants_preserved_inside_hull() {
        let v = Volume::filled([5, 4, 3], scaled_affine([2.0; 3], [-4.0, -3.0, -2.0]), 2.75).unwrap();
        let g = TargetGrid::new([7, 7, 7], scaled_affine([1.3; 3], [-4.0, -3.0, -2.0])).unwrap();
        let out = resample_continuous(&v, &g).unwrap();
        for (idx, &x) in out.data().iter().enumerate() {
            let i = idx % 7;
            let j = (idx / 7) % 7;
            let k = idx / 49;
            let inside = i as f64 * 1.3 <= 8.0 && j as f64 * 1.3 <= 6.0 && k as f64 * 1.3 <= 4.0;
            if inside {
                assert!((x - 2.75).abs() < 1e-12, "{x} at {i},{j},{k}");
            } else {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn nearest_upsampling_replicates_blocks() {
        let src = Volume::new([2, 2, 2], IDENTITY, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        let g = TargetGrid::new([4, 4, 4], scaled_affine([0.5; 3], [-0.25; 3])).unwrap();
        let out = resample_nearest(&src, &g).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..4 {
                    assert_eq!(out.get(i, j, k), src.get(i / 2, j / 2, k / 2));
                }
            }
        }
    }

    #[test]
    fn nearest_ties_go_to_lower_index() {
        let src = Volume::new([2, 1, 1], IDENTITY, vec![10.0, 20.0]).unwrap();
        let g = TargetGrid::new([1, 1, 1], scaled_affine([1.0; 3], [0.5, 0.0, 0.0])).unwrap();
        assert_eq!(resample_nearest(&src, &g).unwrap().data(), &[10.0]);
    }

    #[test]
    fn mask_intersection_and_application() {
        let ones = Volume::filled([2, 2, 2], IDENTITY, 1.0).unwrap();
        let mut holed = vec![1.0; 8];
        holed[5] = 0.0;
        let holed = Volume::new([2, 2, 2], IDENTITY, holed).unwrap();
        assert_eq!(intersect_masks(&[ones.clone(), ones.clone()]).unwrap(), ones);
        let both = intersect_masks(&[ones.clone(), holed.clone()]).unwrap();
        assert_eq!(both, holed);
        assert_eq!(intersect_masks(&[]), Err(Error::EmptyMaskList));
        let other = Volume::filled([2, 2, 2], scaled_affine([2.0; 3], [0.0; 3]), 1.0).unwrap();
        assert_eq!(intersect_masks(&[ones.clone(), other]), Err(Error::GridMismatch));

        let ramp = Volume::new([2, 2, 2], IDENTITY, (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(apply_mask(&ramp, &ones).unwrap().values(), ramp.data());
        let zero = Volume::filled([2, 2, 2], IDENTITY, 0.0).unwrap();
        assert_eq!(apply_mask(&ramp, &zero), Err(Error::EmptyIntersection));
    }

    #[test]
    fn checkerboard_mask_selects_even_parity_voxels() {
        let n = 4;
        let ramp = Volume::new([n, n, n], IDENTITY, (0..64).map(f64::from).collect()).unwrap();
        let mut mask = Vec::new();
        let mut expected = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let on = (i + j + k) % 2 == 0;
                    mask.push(if on { 1.0 } else { 0.0 });
                    if on {
                        expected.push((i + n * (j + n * k)) as f64);
                    }
                }
            }
        }
        let mask = Volume::new([n, n, n], IDENTITY, mask).unwrap();
        let mv = apply_mask(&ramp, &mask).unwrap();
        assert_eq!(mv.values(), expected.as_slice());
        assert_eq!(mv.n_voxels(), 32);
        let back = unmask(&mv, &mask).unwrap();
        for (idx, (&b, &m)) in back.data().iter().zip(mask.data()).enumerate() {
            assert_eq!(b, if m > 0.5 { idx as f64 } else { 0.0 });
        }
    }
}
