//! Pearson similarity between masked statistic maps.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pipeline::PipelineId;
use crate::resample::MaskedVector;

/// Symmetric P x P correlation matrix for one (contrast, group), pipelines in
/// canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pipelines: Vec<PipelineId>,
    r: Vec<f64>,
    contrast: String,
    group_id: String,
    n_voxels: usize,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, reordering rows and columns
    /// into canonical pipeline order.
    pub fn new(
        pipelines: Vec<PipelineId>,
        r: Vec<f64>,
        contrast: impl Into<String>,
        group_id: impl Into<String>,
        n_voxels: usize,
    ) -> Result<Self> {
        let p = pipelines.len();
        if p == 0 {
            return Err(Error::EmptyList);
        }
        if r.len() != p * p {
            return Err(Error::InvalidConfig(alloc::format!(
                "similarity matrix has {} entries for {} pipelines",
                r.len(),
                p
            )));
        }
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| pipelines[a].cmp(&pipelines[b]));
        if order.windows(2).any(|w| pipelines[w[0]] == pipelines[w[1]]) {
            return Err(Error::OrderMismatch);
        }
        let mut sorted = Vec::with_capacity(p * p);
        for &i in &order {
            for &j in &order {
                let v = r[i * p + j];
                if !v.is_finite() || v.abs() > 1.0 || v != r[j * p + i] {
                    return Err(Error::InvalidConfig(
                        "similarity entries must be symmetric and within [-1, 1]".into(),
                    ));
                }
                sorted.push(v);
            }
        }
        if (0..p).any(|i| sorted[i * p + i] != 1.0) {
            return Err(Error::InvalidConfig("similarity diagonal must be 1".into()));
        }
        Ok(Self {
            pipelines: order.iter().map(|&i| pipelines[i]).collect(),
            r: sorted,
            contrast: contrast.into(),
            group_id: group_id.into(),
            n_voxels,
        })
    }

    pub fn pipelines(&self) -> &[PipelineId] {
        &self.pipelines
    }

    pub fn len(&self) -> usize {
        self.pipelines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pipelines.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn contrast(&self) -> &str {
        &self.contrast
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    /// Number of in-mask voxels the correlations were computed over.
    pub fn n_voxels(&self) -> usize {
        self.n_voxels
    }
}

struct Centered {
    dev: Vec<f64>,
    ss: f64,
}

fn center(x: &[f64]) -> Result<Centered> {
    if x.len() < 2 {
        return Err(Error::LengthTooSmall(x.len()));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ZeroVariance);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss = dev.iter().map(|d| d * d).sum();
    Ok(Centered { dev, ss })
}

fn correlate(a: &Centered, b: &Centered) -> f64 {
    let sxy: f64 = a.dev.iter().zip(&b.dev).map(|(x, y)| x * y).sum();
    (sxy / libm::sqrt(a.ss * b.ss)).clamp(-1.0, 1.0)
}

/// Two-pass (mean-centred) Pearson correlation.
pub fn pearson(x: &MaskedVector, y: &MaskedVector) -> Result<f64> {
    if x.mask_hash() != y.mask_hash() {
        return Err(Error::MaskMismatch);
    }
    if x.n_voxels() != y.n_voxels() {
        return Err(Error::MaskMismatch);
    }
    Ok(correlate(&center(x.values())?, &center(y.values())?))
}

/// Error from [`similarity_matrix`] naming the offending pipeline pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairError {
    pub a: PipelineId,
    pub b: Option<PipelineId>,
    pub error: Error,
}

/// All pairwise correlations for one group.
///
/// Each vector is centred once; every pair then gives the same value as
/// [`pearson`] on the same inputs.
pub fn similarity_matrix(
    maps: &[(PipelineId, MaskedVector)],
    contrast: &str,
    group_id: &str,
) -> Result<SimilarityMatrix, PairError> {
    let first = maps.first().ok_or(PairError {
        a: PipelineId::all()[0],
        b: None,
        error: Error::EmptyList,
    })?;
    let mut centered = Vec::with_capacity(maps.len());
    for (id, v) in maps {
        if v.mask_hash() != first.1.mask_hash() || v.n_voxels() != first.1.n_voxels() {
            return Err(PairError {
                a: first.0,
                b: Some(*id),
                error: Error::MaskMismatch,
            });
        }
        centered.push(center(v.values()).map_err(|error| PairError {
            a: *id,
            b: None,
            error,
        })?);
    }
    let p = maps.len();
    let mut r = alloc::vec![1.0; p * p];
    for i in 0..p {
        for j in (i + 1)..p {
            let v = correlate(&centered[i], &centered[j]);
            r[i * p + j] = v;
            r[j * p + i] = v;
        }
    }
    let pipelines = maps.iter().map(|(id, _)| *id).collect();
    SimilarityMatrix::new(pipelines, r, contrast, group_id, first.1.n_voxels()).map_err(|error| {
        PairError {
            a: first.0,
            b: None,
            error,
        }
    })
}

/// Elementwise mean over groups; the result's group id is `"mean"`.
pub fn mean_similarity(mats: &[SimilarityMatrix]) -> Result<SimilarityMatrix> {
    let first = mats.first().ok_or(Error::EmptyList)?;
    if mats
        .iter()
        .any(|m| m.pipelines != first.pipelines || m.contrast != first.contrast)
    {
        return Err(Error::OrderMismatch);
    }
    let n = mats.len() as f64;
    let p = first.len();
    let mut r = alloc::vec![0.0; p * p];
    for m in mats {
        for (acc, v) in r.iter_mut().zip(&m.r) {
            *acc += v;
        }
    }
    for (idx, v) in r.iter_mut().enumerate() {
        *v = if idx % (p + 1) == 0 { 1.0 } else { (*v / n).clamp(-1.0, 1.0) };
    }
    Ok(SimilarityMatrix {
        pipelines: first.pipelines.clone(),
        r,
        contrast: first.contrast.clone(),
        group_id: "mean".into(),
        n_voxels: first.n_voxels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mv(v: &[f64]) -> MaskedVector {
        MaskedVector::new(v.to_vec(), 7).unwrap()
    }

    #[test]
    fn pearson_hand_cases() {
        let x = mv(&[1.0, 2.0, 3.0]);
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &mv(&[-1.0, -2.0, -3.0])).unwrap(), -1.0);
        // sxy = 3, sxx = 2, syy = 14/3
        let r = pearson(&x, &mv(&[1.0, 2.0, 4.0])).unwrap();
        let want = 3.0 / libm::sqrt(2.0 * 14.0 / 3.0);
        assert!((r - want).abs() < 1e-15);
        assert!((r - 0.981_980_506_061_965_7).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson(&mv(&[1.0, 1.0, 1.0]), &mv(&[1.0, 2.0, 3.0])), Err(Error::ZeroVariance));
        assert_eq!(pearson(&mv(&[1.0]), &mv(&[2.0])), Err(Error::LengthTooSmall(1)));
        let other = MaskedVector::new(vec![1.0, 2.0, 3.0], 8).unwrap();
        assert_eq!(pearson(&mv(&[1.0, 2.0, 3.0]), &other), Err(Error::MaskMismatch));
        // a constant whose mean is not exactly representable
        assert_eq!(pearson(&mv(&[0.1, 0.1, 0.1]), &mv(&[1.0, 2.0, 3.0])), Err(Error::ZeroVariance));
    }

    #[test]
    fn matrix_is_canonically_ordered() {
        let ids: Vec<PipelineId> = ["spm,8,0,0", "fsl,5,6,0", "fsl,5,24,0"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let maps = vec![
            (ids[0], mv(&[1.0, 2.0, 3.0, 5.0])),
            (ids[1], mv(&[1.0, 2.0, 4.0, 4.0])),
            (ids[2], mv(&[4.0, 1.0, 3.0, 2.0])),
        ];
        let m = similarity_matrix(&maps, "c", "g").unwrap();
        let order: Vec<_> = m.pipelines().iter().map(|p| p.to_string()).collect();
        assert_eq!(order, ["fsl,5,24,0", "fsl,5,6,0", "spm,8,0,0"]);
        assert_eq!(m.get(0, 2), pearson(&maps[2].1, &maps[0].1).unwrap());
        assert_eq!(m.get(1, 2), m.get(2, 1));
        assert_eq!(m.n_voxels(), 4);
    }

    #[test]
    fn pair_error_names_pipeline() {
        let a: PipelineId = "fsl,5,0,0".parse().unwrap();
        let b: PipelineId = "fsl,5,0,1".parse().unwrap();
        let err = similarity_matrix(&[(a, mv(&[1.0, 2.0])), (b, mv(&[3.0, 3.0]))], "c", "g").unwrap_err();
        assert_eq!(err.a, b);
        assert_eq!(err.error, Error::ZeroVariance);
    }

    fn const_matrix(off: f64, group: &str) -> SimilarityMatrix {
        let ids = PipelineId::all()[..3].to_vec();
        let r = (0..9).map(|i| if i % 4 == 0 { 1.0 } else { off }).collect();
        SimilarityMatrix::new(ids, r, "c", group, 10).unwrap()
    }

    #[test]
    fn mean_of_matrices() {
        let a = const_matrix(0.9, "a");
        let m = mean_similarity(&[a.clone()]).unwrap();
        assert_eq!(m.values(), a.values());
        assert_eq!(m.group_id(), "mean");
        let m = mean_similarity(&[a, const_matrix(0.7, "b")]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.8 };
                assert!((m.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert_eq!(mean_similarity(&[]), Err(Error::EmptyList));
    }

    #[test]
    fn mean_of_hand_matrices() {
        let ids = PipelineId::all()[..3].to_vec();
        let a = SimilarityMatrix::new(ids.clone(), vec![1.0, 0.5, 0.2, 0.5, 1.0, -0.4, 0.2, -0.4, 1.0], "c", "a", 3).unwrap();
        let b = SimilarityMatrix::new(ids.clone(), vec![1.0, 0.1, 0.6, 0.1, 1.0, 0.0, 0.6, 0.0, 1.0], "c", "b", 3).unwrap();
        let m = mean_similarity(&[a, b]).unwrap();
        let want = [1.0, 0.3, 0.4, 0.3, 1.0, -0.2, 0.4, -0.2, 1.0];
        for (got, want) in m.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        let other = SimilarityMatrix::new(ids, vec![1.0; 9], "d", "x", 3).unwrap();
        assert_eq!(mean_similarity(&[m, other]), Err(Error::OrderMismatch));
    }
}
