use pipespace_core::ari::ari_from_labels;
use pipespace_core::features::{fdr_bh, threshold_map, z_to_p};
use pipespace_core::graph::{modularity, Partition, WeightedGraph};
use pipespace_core::oracle::brute_force_best_partition;
use pipespace_core::resample::{intersect_masks, resample_continuous, resample_nearest, MaskedVector};
use pipespace_core::similarity::{pearson, similarity_matrix};
use pipespace_core::stability::cooccurrence;
use pipespace_core::volume::{scaled_affine, TargetGrid, Volume, IDENTITY};
use pipespace_core::{louvain, PipelineId};
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn symmetric(n: usize, upper: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = *it.next().unwrap();
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    w
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (3..=max_n).prop_flat_map(|n| {
        prop::collection::vec(0.0f64..1.0, n * (n - 1) / 2).prop_filter_map("all-zero graph", move |upper| {
            WeightedGraph::new(labels(n), &symmetric(n, &upper)).ok()
        })
    })
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn mv(v: &[f64]) -> MaskedVector {
    MaskedVector::new(v.to_vec(), 42).unwrap()
}

fn vectors(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-10.0f64..10.0, len),
        prop::collection::vec(-10.0f64..10.0, len),
    )
}

proptest! {
    #[test]
    fn pearson_symmetric_and_affine_invariant((x, y) in vectors(40), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let r = pearson(&mv(&x), &mv(&y)).unwrap();
        prop_assert_eq!(r, pearson(&mv(&y), &mv(&x)).unwrap());
        let scaled: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson(&mv(&scaled), &mv(&y)).unwrap() - r).abs() < 1e-10);
        let flipped: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&mv(&flipped), &mv(&y)).unwrap() + r).abs() < 1e-10);
        prop_assert!((r - naive_pearson(&x, &y)).abs() < 1e-10);
    }

    #[test]
    fn pearson_invariant_to_shared_voxel_permutation((x, y) in vectors(30), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        let mut s = seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let px: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let r = pearson(&mv(&x), &mv(&y)).unwrap();
        prop_assert!((pearson(&mv(&px), &mv(&py)).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn similarity_matrix_matches_pairwise_oracle(maps in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 25), 2..7)) {
        let ids = PipelineId::all();
        let input: Vec<(PipelineId, MaskedVector)> = maps.iter().enumerate().map(|(i, m)| (ids[23 - i], mv(m))).collect();
        let m = similarity_matrix(&input, "c", "g").unwrap();
        for (a, pa) in m.pipelines().iter().enumerate() {
            for (b, pb) in m.pipelines().iter().enumerate() {
                let xa = &input.iter().find(|(id, _)| id == pa).unwrap().1;
                let xb = &input.iter().find(|(id, _)| id == pb).unwrap().1;
                let want = if a == b { 1.0 } else { naive_pearson(xa.values(), xb.values()) };
                prop_assert!((m.get(a, b) - want).abs() < 1e-10);
                prop_assert_eq!(m.get(a, b), m.get(b, a));
            }
        }
    }

    #[test]
    fn aggregation_keeps_modularity(g in graph_strategy(8), raw in prop::collection::vec(0usize..3, 8)) {
        let n = g.len();
        let coarse = pipespace_core::graph::canonical_labels(&raw[..n]);
        let agg = g.aggregate(&coarse).unwrap();
        let ident: Vec<usize> = (0..agg.len()).collect();
        let q_parent = modularity(&g, &coarse, 1.0).unwrap();
        let q_agg = modularity(&agg, &ident, 1.0).unwrap();
        prop_assert!((q_parent - q_agg).abs() < 1e-12);
    }

    #[test]
    fn louvain_close_to_optimum(g in graph_strategy(7), seed in any::<u64>()) {
        let p = louvain(&g, 1.0, seed).unwrap();
        let best = brute_force_best_partition(&g, 1.0).unwrap();
        prop_assert!(p.modularity() >= best.modularity() - 0.05);
        prop_assert!(p.modularity() <= best.modularity() + 1e-12);
        prop_assert!(p.modularity() >= -0.5 && p.modularity() <= 1.0);
        if p.n_communities() > 1 {
            prop_assert!(p.modularity() >= 0.0);
        }
        prop_assert_eq!(&p, &louvain(&g, 1.0, seed).unwrap());
    }

    #[test]
    fn louvain_invariant_to_weight_scale(g in graph_strategy(8), scale in 0.01f64..100.0, seed in any::<u64>()) {
        let n = g.len();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w[i * n + j] = g.adjacency(i, j) * scale;
                }
            }
        }
        let scaled = WeightedGraph::new(labels(n), &w).unwrap();
        let a = louvain(&g, 1.0, seed).unwrap();
        let b = louvain(&scaled, 1.0, seed).unwrap();
        prop_assert!((a.modularity() - b.modularity()).abs() < 1e-9);
    }

    #[test]
    fn ari_matches_pair_counting(a in prop::collection::vec(0usize..4, 2..20), b_raw in prop::collection::vec(0usize..4, 20)) {
        let b = &b_raw[..a.len()];
        let n = a.len();
        let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                both += f64::from(u8::from(sa && sb));
                in_a += f64::from(u8::from(sa));
                in_b += f64::from(u8::from(sb));
            }
        }
        let total = (n * (n - 1) / 2) as f64;
        let expected = in_a * in_b / total;
        let max = 0.5 * (in_a + in_b);
        let want = if max == expected { 1.0 } else { (both - expected) / (max - expected) };
        let got = ari_from_labels(&a, b).unwrap();
        prop_assert!((got - want).abs() < 1e-12);
        prop_assert!((got - ari_from_labels(b, &a).unwrap()).abs() < 1e-12);
        let permuted: Vec<usize> = a.iter().map(|&l| (l + 1) % 4).collect();
        prop_assert_eq!(ari_from_labels(&permuted, &a).unwrap(), 1.0);
    }

    #[test]
    fn cooccurrence_monotone_and_bounded(parts in prop::collection::vec(prop::collection::vec(0usize..3, 5), 1..8), extra in prop::collection::vec(0usize..3, 5)) {
        let nodes: Vec<String> = PipelineId::all()[..5].iter().map(|p| p.to_string()).collect();
        let ps: Vec<Partition> = parts.iter().map(|a| Partition::from_labels(nodes.clone(), a, 0.0, 1.0).unwrap()).collect();
        let before = cooccurrence("c", &ps).unwrap();
        let mut more = ps.clone();
        more.push(Partition::from_labels(nodes.clone(), &extra, 0.0, 1.0).unwrap());
        let after = cooccurrence("c", &more).unwrap();
        for (x, y) in before.counts().iter().zip(after.counts()) {
            prop_assert!(y >= x);
        }
        prop_assert!(after.rates().iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn z_to_p_decreasing_and_symmetric(z in -8.0f64..8.0, dz in 1e-6f64..1.0) {
        let p = z_to_p(z).unwrap();
        prop_assert!(z_to_p(z + dz).unwrap() < p);
        prop_assert!((p + z_to_p(-z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bh_monotone_in_q_with_prefix_rejections(ps in prop::collection::vec(0.0f64..1.0, 1..60), q1 in 0.001f64..0.5, dq in 0.0f64..0.4) {
        let lo = fdr_bh(&ps, q1).unwrap();
        let hi = fdr_bh(&ps, q1 + dq).unwrap();
        prop_assert!(hi.n_rejected >= lo.n_rejected);
        if let Some(cut) = lo.p_cutoff {
            prop_assert_eq!(ps.iter().filter(|&&p| p <= cut).count(), lo.n_rejected);
        }
    }

    #[test]
    fn threshold_count_drops_when_z_decreases(zs in prop::collection::vec(-2.0f64..7.0, 1..80), shift in prop::collection::vec(0.0f64..2.0, 80)) {
        let lowered: Vec<f64> = zs.iter().zip(&shift).map(|(z, s)| z - s).collect();
        let (a, _) = threshold_map(&mv(&zs), 0.05).unwrap();
        let (b, _) = threshold_map(&mv(&lowered), 0.05).unwrap();
        let count = |v: &MaskedVector| v.values().iter().filter(|&&x| x > 0.5).count();
        prop_assert!(count(&b) <= count(&a));
    }

    #[test]
    fn mask_intersection_is_elementwise_min(bits in prop::collection::vec(prop::collection::vec(any::<bool>(), 512), 3)) {
        let masks: Vec<Volume> = bits.iter().map(|b| {
            Volume::new([8, 8, 8], IDENTITY, b.iter().map(|&x| f64::from(u8::from(x))).collect()).unwrap()
        }).collect();
        let out = intersect_masks(&masks).unwrap();
        for i in 0..512 {
            let want = masks.iter().map(|m| m.data()[i]).fold(1.0, f64::min);
            prop_assert_eq!(out.data()[i], want);
        }
        let ab = intersect_masks(&masks[..2]).unwrap();
        let ba = intersect_masks(&[masks[1].clone(), masks[0].clone()]).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(intersect_masks(&[ab.clone(), masks[2].clone()]).unwrap(), out.clone());
        prop_assert_eq!(intersect_masks(&[ab.clone(), ab.clone()]).unwrap(), ab);
    }

    #[test]
    fn nearest_only_copies_values(data in prop::collection::vec(-5.0f64..5.0, 27), vox in 0.3f64..2.0, off in -1.0f64..1.0) {
        let v = Volume::new([3, 3, 3], IDENTITY, data.clone()).unwrap();
        let g = TargetGrid::new([5, 4, 3], scaled_affine([vox; 3], [off; 3])).unwrap();
        let out = resample_nearest(&v, &g).unwrap();
        prop_assert!(out.data().iter().all(|x| *x == 0.0 || data.contains(x)));
    }

    #[test]
    fn trilinear_exact_on_multilinear_fields(c in prop::collection::vec(-3.0f64..3.0, 4), vox in 0.4f64..1.5, off in 0.0f64..1.0) {
        let n = 6;
        let f = |x: f64, y: f64, z: f64| c[0] + c[1] * x + c[2] * y + c[3] * x * z;
        let mut data = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    data.push(f(i as f64, j as f64, k as f64));
                }
            }
        }
        let v = Volume::new([n, n, n], IDENTITY, data).unwrap();
        let g = TargetGrid::new([4, 4, 4], scaled_affine([vox; 3], [off; 3])).unwrap();
        let out = resample_continuous(&v, &g).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..4 {
                    let p = [off + vox * i as f64, off + vox * j as f64, off + vox * k as f64];
                    if p.iter().all(|&x| x <= (n - 1) as f64) {
                        prop_assert!((out.get(i, j, k) - f(p[0], p[1], p[2])).abs() < 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn z_to_p_against_high_precision_oracle() {
    // upper-tail normal probabilities evaluated with 40-digit arithmetic
    let table = [
        (0.0, 0.5),
        (1.6448536, 0.050_000_002_779_657_459),
        (1.959964, 0.024_999_999_096_442_404),
        (3.0, 0.001_349_898_031_630_094_5),
        (5.0, 2.866_515_718_791_939_1e-7),
        (8.0, 6.220_960_574_271_784e-16),
        (-2.5, 0.993_790_334_674_223_86),
        (0.5, 0.308_537_538_725_986_9),
        (1.6448536269514722, 0.050_000_000_000_000_053),
        (1.959963985, 0.024_999_999_973_118_438),
    ];
    for (z, want) in table {
        let got = z_to_p(z).unwrap();
        assert!((got - want).abs() < 1e-12, "z = {z}: {got} vs {want}");
    }
}
