mod common;

use common::{mat, rng};
use isorank::aggregation::{encode_matrix, AggregatedMatrix, BlockGrid};
use isorank::model::{gen_separated_instance, gen_two_block_instance, sample_full_observations, TwoBlockLayout};
use isorank::tree::{check_property2, refined_oracle};
use isorank::trisection::{
    cusum, cusum_shifted, dimension_reduction_cp, dimension_reduction_wm, double_trisection,
    pca_direction, pivot, rtilde_cp, rtilde_wm, threshold_weights, NeighborhoodContext, PaddedSeries,
    PowerSettings, TrisectionParams, Variant, ZETA_EFF,
};
use isorank::{Matrix, NoiseSpec};
use proptest::prelude::*;

fn column(values: &[f64]) -> AggregatedMatrix {
    let z = Matrix::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
    AggregatedMatrix {
        z,
        experts: (0..values.len()).collect(),
        blocks: vec![1],
        r: 1,
    }
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn default_constants() {
    let p = TrisectionParams::new(0.5, 0.1, Variant::Ht).unwrap();
    assert!((p.beta_tris - 4.0 * 2f64.sqrt() * 0.5).abs() < 1e-15);
    assert!((p.beta_bar_tris - 8.0 * 2f64.sqrt() * 0.5).abs() < 1e-15);
    assert_eq!(p.practical_scaling, 1.0 / 64.0);
    assert_eq!(TrisectionParams::paper(0.5, 0.1, Variant::Ht).unwrap().practical_scaling, 1.0);
    assert_eq!(TrisectionParams::new(0.0, 0.1, Variant::Ht).unwrap().zeta, ZETA_EFF);
    assert!(TrisectionParams::new(0.5, 1.0, Variant::Ht).is_err());
    assert!(TrisectionParams::new(-0.5, 0.1, Variant::Ht).is_err());
}

#[test]
fn pivot_three_experts() {
    let (zeta, delta) = (0.1, 0.05);
    let params = TrisectionParams::new(zeta, delta, Variant::Ht).unwrap();
    let unit = zeta * (6.0f64 / delta).ln().sqrt();
    let res = pivot(&column(&[0.0, 10.0 * unit, 20.0 * unit]), &[1.0], 2, &params).unwrap();
    // Aggressive margin 4√2·unit ≈ 5.7·unit < 10·unit < 8√2·unit ≈ 11.3·unit.
    assert_eq!(res.l, vec![0]);
    assert_eq!(res.u, vec![2]);
    assert!(res.l_bar.is_empty() && res.u_bar.is_empty());
}

#[test]
fn pivot_noiseless_separated() {
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let res = pivot(&column(&[0.3, 0.1, 0.4, 0.2, 0.5]), &[2.0], 3, &params).unwrap();
    assert_eq!(res.l, vec![1, 3]);
    assert_eq!(res.u, vec![2, 4]);
    assert_eq!(res.l_bar, res.l);
    assert_eq!(res.u_bar, res.u);
}

#[test]
fn pivot_identical_rows() {
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let res = pivot(&column(&[0.7; 4]), &[1.0], 2, &params).unwrap();
    assert!(res.is_empty());
}

#[test]
fn pivot_rejects_bad_weights_and_rank() {
    let params = TrisectionParams::new(0.1, 0.05, Variant::Ht).unwrap();
    let z = column(&[0.0, 1.0]);
    assert!(pivot(&z, &[0.0], 1, &params).is_err());
    assert!(pivot(&z, &[-1.0], 1, &params).is_err());
    assert!(pivot(&z, &[1.0], 0, &params).is_err());
    assert!(pivot(&z, &[1.0], 3, &params).is_err());
}

#[test]
fn pivot_semi_random_widens_thresholds() {
    let (zeta, delta) = (0.01, 0.05);
    let ht = TrisectionParams::new(zeta, delta, Variant::Ht).unwrap();
    let sr = ht.for_variant(Variant::WmSr);
    // One block: ‖w‖∞/‖w‖₂ = 1, so the semi-random margins grow by 4 and 8.
    let z = column(&[0.0, 1.0, 6.0, 10.0]);
    let a = pivot(&z, &[1.0], 2, &ht).unwrap();
    let b = pivot(&z, &[1.0], 2, &sr).unwrap();
    assert_eq!(a.u, vec![2, 3]);
    assert_eq!(b.u, vec![2, 3]);
    assert!(a.u_bar == vec![2, 3] && b.u_bar == vec![3]);
    assert_eq!(a.l, vec![0]);
    assert!(b.l.is_empty());
}

#[test]
fn cusum_examples() {
    let flat = PaddedSeries::new(&[0.4; 10], 1.0);
    assert!(cusum(&flat, 5, 3).abs() < 1e-15);
    let step = PaddedSeries::new(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 1.0);
    assert_eq!(cusum(&step, 4, 3), 1.0);
    let y = PaddedSeries::new(&[0.0, 0.0, 0.5, 0.5], 1.0);
    assert_eq!(cusum(&y, 3, 2), 0.5);
    // Windows past the edges use the padding.
    assert_eq!(cusum(&y, 1, 2), 0.0);
    assert_eq!(cusum(&y, 5, 2), (2.0 - 1.0) / 2.0);
    assert_eq!(cusum_shifted(&y, 4, 1), 0.5);
}

#[test]
fn rtilde_formulas() {
    let p = TrisectionParams::paper(0.5, 0.1, Variant::Ht).unwrap();
    let (ps, h, r, d) = (4usize, 0.25, 2usize, 64usize);
    let r0 = 32.0 * 0.25 * (2.0 * 64.0 / 0.1f64).ln() / (ps as f64 * h * h);
    assert_eq!(rtilde_cp(ps, h, r, d, &p), 8 * (r0.ceil() as u64).max(r as u64));
    let r0 = 512.0 * (4.0 * 64.0 * 7.0 / 0.1f64).ln() * 0.25 / (ps as f64 * h * h);
    let dya = 2f64.powf(r0.log2().ceil()) as u64;
    assert_eq!(rtilde_wm(ps, h, r, d, 7, &p), 4 * dya.max(r as u64));
    // Small noise: the scale floor binds.
    let q = TrisectionParams::new(0.0, 0.1, Variant::Ht).unwrap();
    assert_eq!(rtilde_cp(ps, h, r, d, &q), 16);
    assert_eq!(rtilde_wm(ps, h, r, d, 7, &q), 8);
}

#[test]
fn reduction_finds_the_simple_jump() {
    let (n, d, r, h) = (4, 64, 4, 0.5);
    let inst = gen_two_block_instance(n, d, r, h, &TwoBlockLayout::SimpleCp { block: 5 }, 0.0).unwrap();
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let q = dimension_reduction_cp(&inst.m, &all(n), h, r, &params).unwrap();
    assert!(q.contains(&(5 * r + 1)), "{q:?}");
}

#[test]
fn flat_matrix_selects_only_boundary_blocks() {
    // The padding (0 on the left, 1 on the right) makes windows crossing an
    // edge fire; interior blocks of a flat matrix are never selected.
    let (n, d, r, h) = (3, 256, 2, 0.25);
    let y = Matrix::from_elem((n, d), 0.5);
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let width = rtilde_cp(n, h, r, d, &params) as usize;
    let q = dimension_reduction_cp(&y, &all(n), h, r, &params).unwrap();
    assert!(!q.is_empty());
    assert!(q.iter().all(|&l| l <= width || l + r + width > d + 1), "{q:?}");
    let zeros = Matrix::zeros((n, d));
    let q = dimension_reduction_cp(&zeros, &all(n), h, r, &params).unwrap();
    assert!(q.iter().all(|&l| l + r + width > d + 1));
}

#[test]
fn memory_reduction_ignores_zero_width() {
    // Neighbors coincide, so the width statistic is zero although the
    // group's own profile jumps.
    let d = 64;
    let mut y = Matrix::from_elem((3, d), 0.5);
    for k in 0..d {
        y[[1, k]] = if k < 32 { 0.3 } else { 0.7 };
    }
    let ctx = NeighborhoodContext {
        above: vec![vec![2]],
        below: vec![vec![0]],
    };
    let params = TrisectionParams::new(0.0, 0.05, Variant::Wm).unwrap();
    let (h, r) = (0.25, 2);
    assert!(dimension_reduction_cp(&y, &[1], h, r, &params).unwrap().contains(&33));
    assert!(dimension_reduction_wm(&y, &ctx, &[1], h, r, &params).unwrap().is_empty());
    let flat = Matrix::from_elem((3, d), 0.5);
    assert!(dimension_reduction_wm(&flat, &ctx, &[1], h, r, &params).unwrap().is_empty());
}

#[test]
fn memory_reduction_at_the_root_sees_the_jump() {
    let d = 64;
    let mut y = Matrix::zeros((2, d));
    for k in 32..d {
        y[[1, k]] = 0.5;
    }
    y.row_mut(0).fill(0.25);
    let params = TrisectionParams::new(0.0, 0.05, Variant::Wm).unwrap();
    let q = dimension_reduction_wm(&y, &NeighborhoodContext::root(), &[0, 1], 0.25, 2, &params).unwrap();
    assert!(q.contains(&33), "{q:?}");
}

#[test]
fn pca_recovers_rank_one_pattern() {
    let (n, r, blocks, h) = (6, 4, 8, 0.1);
    let inst = gen_two_block_instance(n, blocks * r, r, h, &TwoBlockLayout::spectral(blocks, 3), 0.0).unwrap();
    let q: Vec<usize> = BlockGrid::new(blocks * r, r).unwrap().starts[..blocks].to_vec();
    let z = encode_matrix(&inst.m, &all(n), &q, r).unwrap();
    let v = pca_direction(&z, &z, &PowerSettings::default()).unwrap();
    let u: Vec<f64> = (0..n).map(|i| if i < n / 2 { -1.0 } else { 1.0 } / (n as f64).sqrt()).collect();
    let dot: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
    assert!((dot.abs() - 1.0).abs() < 1e-6, "{v:?}");
}

#[test]
fn pca_matches_dense_eigensolver() {
    let mut g = rng(12);
    let inst = gen_separated_instance(7, 16, 0.2, &mut g).unwrap();
    let ys = sample_full_observations(&inst, 2, &NoiseSpec::Gaussian { sigma: 0.2 }, &mut g).unwrap();
    let q: Vec<usize> = (1..=16).collect();
    let z1 = encode_matrix(&ys[0], &all(7), &q, 1).unwrap();
    let z2 = encode_matrix(&ys[1], &all(7), &q, 1).unwrap();
    let v = pca_direction(&z1, &z2, &PowerSettings { tol: 1e-14, max_iter: 100_000 }).unwrap();
    let c = z1.centered().unwrap();
    let dm = &c - &z2.centered().unwrap();
    let a = c.dot(&c.t()) - 0.5 * dm.dot(&dm.t());
    let sym = nalgebra::DMatrix::from_fn(7, 7, |i, j| a[[i, j]]);
    let eig = sym.symmetric_eigen();
    let top = (0..7).max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap();
    let dot: f64 = (0..7).map(|i| v[i] * eig.eigenvectors[(i, top)]).sum();
    assert!((dot.abs() - 1.0).abs() < 1e-6);
    let lead = v.iter().fold(0.0f64, |b, &x| if x.abs() > b.abs() { x } else { b });
    assert!(lead > 0.0);
}

#[test]
fn pca_single_expert() {
    let z = column(&[0.3]);
    assert_eq!(pca_direction(&z, &z, &PowerSettings::default()).unwrap(), vec![1.0]);
}

#[test]
fn weights_examples() {
    let (zeta, delta) = (0.1, 0.05);
    let params = TrisectionParams::new(zeta, delta, Variant::Ht).unwrap();
    let q = 3;
    let cut = 2.0 * zeta * (2.0 * (2.0 * q as f64 / delta).ln()).sqrt();
    let v = [-(0.5f64).sqrt(), 0.5f64.sqrt()];
    let a = 3.0 * cut / 2f64.sqrt();
    let z3 = AggregatedMatrix {
        z: mat(&[&[0.0, 5.0 - a, 0.2], &[0.0, 5.0 + a, 0.2]]),
        experts: vec![0, 1],
        blocks: vec![1, 2, 3],
        r: 1,
    };
    let w = threshold_weights(&v, &z3, &params).unwrap();
    assert_eq!(w[0], 0.0);
    assert!((w[1] - 3.0 * cut).abs() < 1e-12);
    assert_eq!(w[2], 0.0);

    let small = AggregatedMatrix {
        z: mat(&[&[0.0, 0.0], &[0.1 * cut, -0.2 * cut]]),
        experts: vec![0, 1],
        blocks: vec![1, 2],
        r: 1,
    };
    assert!(threshold_weights(&v, &small, &params).unwrap().iter().all(|&x| x == 0.0));

    let exact = TrisectionParams::new(0.0, delta, Variant::Ht).unwrap();
    let w = threshold_weights(&v, &small, &exact).unwrap();
    let expect = [0.1 * cut / 2f64.sqrt(), 0.2 * cut / 2f64.sqrt()];
    for (x, y) in w.iter().zip(expect) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn double_trisection_noiseless_split() {
    let n = 9;
    let inst = gen_separated_instance(n, 32, 0.0, &mut rng(13)).unwrap();
    let samples = vec![&inst.m; 6];
    for variant in [Variant::Ht, Variant::Wm, Variant::WmSr] {
        let params = TrisectionParams::new(0.0, 0.05, variant).unwrap();
        let gamma = 5;
        let out = double_trisection(&samples, &NeighborhoodContext::root(), &all(n), gamma, &params).unwrap();
        let below: Vec<usize> = (0..n).filter(|&e| inst.pi_star.rank(e) + 1 < gamma).collect();
        let above: Vec<usize> = (0..n).filter(|&e| inst.pi_star.rank(e) + 1 > gamma).collect();
        if variant == Variant::WmSr {
            // Widened margins keep a neighborhood of the pivot undecided.
            assert!(out.result.l.iter().all(|e| below.contains(e)));
            assert!(out.result.u.iter().all(|e| above.contains(e)));
        } else {
            assert_eq!(out.result.l, below, "{variant:?}");
            assert_eq!(out.result.u, above, "{variant:?}");
        }
    }
}

#[test]
fn double_trisection_two_types() {
    let (n, d) = (8, 32);
    let inst = gen_two_block_instance(n, d, 4, 0.5, &TwoBlockLayout::SimpleCp { block: 3 }, 0.0).unwrap();
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let out = double_trisection(&vec![&inst.m; 6], &NeighborhoodContext::root(), &all(n), 4, &params).unwrap();
    assert_eq!(out.result.u, vec![4, 5, 6, 7]);
    assert!(out.result.l.is_empty());
}

#[test]
fn double_trisection_constant_matrix() {
    let m = Matrix::from_elem((6, 16), 0.4);
    let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
    let out = double_trisection(&vec![&m; 6], &NeighborhoodContext::root(), &all(6), 3, &params).unwrap();
    assert!(out.result.is_empty());
}

#[test]
fn double_trisection_input_checks() {
    let m = Matrix::zeros((3, 4));
    let params = TrisectionParams::new(0.1, 0.05, Variant::Ht).unwrap();
    let ctx = NeighborhoodContext::root();
    assert!(double_trisection(&vec![&m; 5], &ctx, &all(3), 1, &params).is_err());
    assert!(double_trisection(&vec![&m; 6], &ctx, &all(3), 4, &params).is_err());
    assert!(double_trisection(&vec![&m; 6], &ctx, &[1], 1, &params).unwrap().result.is_empty());
}

#[test]
fn property2_under_noise() {
    let (n, d, zeta, runs) = (12, 64, 0.05, 40);
    let mut held = 0;
    for seed in 0..runs {
        let mut g = rng(100 + seed);
        let inst = gen_separated_instance(n, d, zeta, &mut g).unwrap();
        let ys = sample_full_observations(&inst, 6, &NoiseSpec::Gaussian { sigma: zeta }, &mut g).unwrap();
        let refs: Vec<&Matrix> = ys.iter().collect();
        let params = TrisectionParams::new(zeta, 0.05, Variant::Wm).unwrap();
        let gamma = n / 2;
        let out = double_trisection(&refs, &NeighborhoodContext::root(), &all(n), gamma, &params).unwrap();
        let oracle = refined_oracle(&inst.m, &inst.pi_star, &vec![0; n]);
        held += usize::from(check_property2(&all(n), gamma, &out.result, &oracle).ok());
    }
    assert!(held as f64 >= 0.9 * runs as f64, "{held}/{runs}");
}

proptest! {
    #[test]
    fn pivot_is_scale_invariant(values in prop::collection::vec(0.0f64..1.0, 2..12), w in prop::collection::vec(0.01f64..1.0, 3), c in 0.01f64..100.0, g in 0usize..12) {
        let n = values.len();
        let z = Matrix::from_shape_fn((n, 3), |(i, b)| values[i] * (b + 1) as f64 * 0.3);
        let agg = AggregatedMatrix { z, experts: all(n), blocks: vec![1, 2, 3], r: 1 };
        let params = TrisectionParams::new(0.02, 0.1, Variant::Ht).unwrap();
        let gamma = g % n + 1;
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        prop_assert_eq!(pivot(&agg, &w, gamma, &params).unwrap(), pivot(&agg, &scaled, gamma, &params).unwrap());
    }

    #[test]
    fn pivot_output_is_nested_and_disjoint(values in prop::collection::vec(-1.0f64..1.0, 1..15), g in 0usize..15, zeta in 0.0f64..0.2) {
        let n = values.len();
        let params = TrisectionParams::new(zeta, 0.1, Variant::Ht).unwrap();
        let res = pivot(&column(&values), &[1.0], g % n + 1, &params).unwrap();
        prop_assert!(res.l_bar.iter().all(|e| res.l.contains(e)));
        prop_assert!(res.u_bar.iter().all(|e| res.u.contains(e)));
        prop_assert!(res.l.iter().all(|e| !res.u.contains(e)));
    }

    #[test]
    fn noiseless_pivot_respects_the_oracle(m in common::bi_isotonic_strategy(2..8, 1..6), g in 0usize..8) {
        let (n, d) = m.dim();
        let q: Vec<usize> = (1..=d).collect();
        let z = encode_matrix(&m, &all(n), &q, 1).unwrap();
        let params = TrisectionParams::new(0.0, 0.1, Variant::Ht).unwrap();
        let gamma = g % n + 1;
        let res = pivot(&z, &vec![1.0; d], gamma, &params).unwrap();
        // Rows are already in oracle order.
        for &e in &res.l_bar {
            prop_assert!((0..e).all(|x| res.l.contains(&x)));
        }
        for &e in &res.u_bar {
            prop_assert!((e + 1..n).all(|x| res.u.contains(&x)));
        }
    }

    #[test]
    fn shifted_cusum_dominates_on_monotone_series(raw in prop::collection::vec(0.0f64..1.0, 1..40), k in -3i64..45, w in 1u64..20) {
        let mut values = raw.clone();
        values.sort_by(f64::total_cmp);
        let s = PaddedSeries::new(&values, 1.0);
        prop_assert!(cusum_shifted(&s, k, w) >= cusum(&s, k, w) - 1e-12);
    }

    #[test]
    fn cusum_matches_definition(raw in prop::collection::vec(0.0f64..1.0, 1..20), k in -3i64..25, w in 1u64..8) {
        let s = PaddedSeries::new(&raw, 1.0);
        let at = |j: i64| if j < 1 { 0.0 } else if j as usize > raw.len() { 1.0 } else { raw[j as usize - 1] };
        let w = w as i64;
        let expect = ((k..k + w).map(at).sum::<f64>() - (k - w..k).map(at).sum::<f64>()) / w as f64;
        prop_assert!((cusum(&s, k, w as u64) - expect).abs() < 1e-12);
    }
}
