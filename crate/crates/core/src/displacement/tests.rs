use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::structured::key_identity_split;

fn random_hankel(rng: &mut ChaCha8Rng, n: usize) -> HankelGen {
    let g: Vec<f64> = (0..2 * n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    HankelGen::from_real(&g).unwrap()
}

/// Moment matrix of a random measure spread like the arcsine law on [−1, 1].
fn random_pd_hankel(rng: &mut ChaCha8Rng, n: usize) -> HankelGen {
    let m = 4 * n;
    let pts: Vec<f64> = (0..m)
        .map(|j| (std::f64::consts::PI * (j as f64 + rng.gen_range(0.0..1.0)) / m as f64).cos())
        .collect();
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    let g: Vec<f64> = (0..2 * n - 1)
        .map(|p| pts.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum())
        .collect();
    HankelGen::from_real(&g).unwrap()
}

fn dense_inverse(h: &HankelGen) -> (DenseMatrix, f64) {
    let m = h.materialize().unwrap();
    let k = m.condition_number().unwrap();
    let inv = m.inverse().unwrap();
    (inv.add(&inv.transpose()).unwrap().scale(C64::new(0.5, 0.0)).real_part(), k)
}

fn recon(x: &FactorNode, y: &FactorNode) -> DenseMatrix {
    DenseMatrix::gram_difference(&x.materialize().unwrap(), &y.materialize().unwrap()).unwrap()
}

#[test]
fn check_displacement_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = random_hankel(&mut rng, 32);
    let (inv, k) = dense_inverse(&h);
    let c = check_displacement(&inv, 2, scaled_tau(1e-10, 32, Some(k))).unwrap();
    assert!(c.passes, "{c:?}");
    let c = check_displacement(&h.materialize().unwrap(), 2, 1e-10).unwrap();
    assert!(c.passes);
    let r = DenseMatrix::from_fn(32, 32, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
    let sym = r.add(&r.transpose()).unwrap();
    let c = check_displacement(&sym, 2, 1e-10).unwrap();
    assert!(!c.passes && c.down_rank >= 30);
}

#[test]
fn first_fold_of_hankel_matches_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = random_hankel(&mut rng, 16);
    let (n1, m1) = fold_level(&h.materialize().unwrap(), 1).unwrap();
    let s = key_identity_split(&h).unwrap();
    assert!(n1.sub(&s.imag_part.materialize().unwrap()).unwrap().max_abs() < 1e-12);
    assert!(m1.sub(&s.real_part.materialize().unwrap()).unwrap().max_abs() < 1e-12);
}

#[test]
fn bisymmetric_input_has_no_imaginary_part() {
    let j = StructuredOp::Exchange { n: 8 }.matrix().unwrap();
    let a = DenseMatrix::from_fn(8, 8, |i, k| C64::new((i * k) as f64 + (i + k) as f64, 0.0));
    let b = a.add(&j.matmul(&a).unwrap().matmul(&j).unwrap()).unwrap();
    let (n1, _) = fold_level(&b, 1).unwrap();
    assert!(n1.max_abs() < 1e-12);
}

#[test]
fn fold_rank_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [16usize, 64] {
        let (inv, k) = dense_inverse(&random_hankel(&mut rng, n));
        let s = fold_structure(&inv, scaled_tau(1e-10, n, Some(k))).unwrap();
        assert!(s.real_bisymmetric && s.imag_hermitian && s.imag_persymmetric);
        assert!(s.real_sylvester_ranks.0 <= 4 && s.real_sylvester_ranks.1 <= 4, "{s:?}");
        assert!(s.imag_stein_rank <= 6, "{s:?}");
        assert!(s.imag_diag_max <= 1e-12 * inv.max_abs());
    }
}

#[test]
fn displacement_block_cases() {
    let opts = DisplacementOptions::default();
    let (d, e) = factor_displacement_block(&DenseMatrix::zeros(8, 8), 8, &opts).unwrap();
    assert_eq!(d.ncols() + e.ncols(), 0);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut g: Vec<C64> = (0..16)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    g[0] = C64::new(0.0, 0.0);
    let t = crate::ToeplitzGen::new(g).unwrap().materialize().unwrap();
    let (d, e) = factor_displacement_block(&t, 16, &opts).unwrap();
    assert!(recon(&d, &e).relative_error(&t).unwrap() < 1e-12);
    assert!(d.ncols() <= 16 && e.ncols() <= 16);

    // Planted Stein rank 6: Q = Σ_j Δ^j W Δᵀ^j for a rank-6 Hermitian W, diagonal removed by construction of W.
    let q = 32;
    let gens: Vec<Vec<C64>> = (0..6)
        .map(|_| (0..q).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let w = DenseMatrix::from_fn(q, q, |a, b| {
        (0..6).map(|k| gens[k][a] * gens[k][b].conj() * if k % 2 == 0 { 1.0 } else { -1.0 }).sum()
    });
    let mut qm = DenseMatrix::zeros(q, q);
    let mut cur = w.clone();
    for _ in 0..q {
        qm = qm.add(&cur).unwrap();
        cur = crate::structured::right_apply(
            &crate::structured::left_apply(&StructuredOp::ShiftDown { n: q }, &cur).unwrap(),
            &StructuredOp::ShiftUp { n: q },
        )
        .unwrap();
    }
    let (d, e) = factor_displacement_block(&qm, q, &opts).unwrap();
    assert!(recon(&d, &e).relative_error(&qm).unwrap() < 1e-9);
}

#[test]
fn level_factors_reconstruct_and_cross_cancels() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (inv, _) = dense_inverse(&random_pd_hankel(&mut rng, 16));
    let opts = DisplacementOptions::default();
    let (n1, m1) = fold_level(&inv, 1).unwrap();
    let (x, y) = factor_nt_general(&GLevelState::from_fold(1, &n1, m1.clone()), &opts).unwrap();
    assert!(recon(&x, &y).relative_error(&n1).unwrap() < 1e-8);
    let (n2, m2) = fold_level(&m1, 2).unwrap();
    let state = GLevelState::from_fold(2, &n2, m2);
    let (x, y) = factor_nt_general(&state, &opts).unwrap();
    assert!(recon(&x, &y).relative_error(&n2).unwrap() < 1e-8);

    // The undoubled cross: only the first block row and column survive.
    let FactorNode::PermutedCopy { child, .. } = &x else { panic!() };
    let FactorNode::Doubling { child: fx, .. } = child.as_ref() else { panic!() };
    let FactorNode::PermutedCopy { child, .. } = &y else { panic!() };
    let FactorNode::Doubling { child: gx, .. } = child.as_ref() else { panic!() };
    let cross = recon(fx, gx);
    let q = state.block_order;
    let scale = n2.max_abs();
    for i in q..16 {
        for j in q..16 {
            assert!(cross[(i, j)].norm() <= 1e-12 * scale.max(1.0) * 16.0);
        }
    }
}

#[test]
fn inverse_of_pd_hankel_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = random_pd_hankel(&mut rng, 16);
    let (inv, k) = dense_inverse(&h);
    let out = displacement_factor(
        &DisplacementInput {
            matrix: inv.clone(),
            rank: 2,
            kappa_bound: Some(k),
        },
        &DisplacementOptions::default(),
    )
    .unwrap();
    let r = out.pair.materialize_target().unwrap();
    assert!(r.relative_error(&inv).unwrap() <= 1e-7);
    assert_eq!(out.report.levels, 2);
    assert_eq!(out.report.eigendecompositions, 3);
    for (m, b) in out.report.stein_ranks.iter().zip(&out.report.stein_bounds) {
        assert!(m <= b);
    }
}

#[test]
fn hankel_input_agrees_with_hankel_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_hankel(&mut rng, 16);
    let m = h.materialize().unwrap();
    let out = displacement_factor(
        &DisplacementInput {
            matrix: m.clone(),
            rank: 2,
            kappa_bound: None,
        },
        &DisplacementOptions::default(),
    )
    .unwrap();
    let a = out.pair.materialize_target().unwrap();
    let b = crate::hankel::hankel_factor(&h).unwrap().materialize_target().unwrap();
    assert!(a.relative_error(&b).unwrap() < 1e-10);
    assert!(a.relative_error(&m).unwrap() < 1e-10);
}

#[test]
fn identity_is_a_scaled_identity_residual() {
    let out = displacement_factor(
        &DisplacementInput {
            matrix: DenseMatrix::identity(16),
            rank: 16,
            kappa_bound: None,
        },
        &DisplacementOptions::default(),
    )
    .unwrap();
    assert!(out.report.residual_is_identity);
    assert_eq!(out.pair.c.ncols(), 0);
    let r = out.pair.materialize_target().unwrap();
    assert!(r.relative_error(&DenseMatrix::identity(16)).unwrap() < 1e-14);
}

#[test]
fn padding_and_rejections() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_hankel(&mut rng, 10);
    let (inv, k) = dense_inverse(&h);
    let out = displacement_factor(
        &DisplacementInput {
            matrix: inv.clone(),
            rank: 2,
            kappa_bound: Some(k),
        },
        &DisplacementOptions::default(),
    )
    .unwrap();
    assert_eq!(out.report.padded_order, 16);
    assert!(out.pair.materialize_target().unwrap().relative_error(&inv).unwrap() < 1e-9);

    let r = DenseMatrix::from_fn(16, 16, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
    let sym = r.add(&r.transpose()).unwrap();
    let err = displacement_factor(
        &DisplacementInput { matrix: sym, rank: 2, kappa_bound: None },
        &DisplacementOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    let err = displacement_factor(
        &DisplacementInput { matrix: r, rank: 16, kappa_bound: None },
        &DisplacementOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Rejected(_)));
}

#[test]
fn perturbation_flag_keeps_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_hankel(&mut rng, 16);
    let (inv, k) = dense_inverse(&h);
    let out = displacement_factor(
        &DisplacementInput { matrix: inv.clone(), rank: 2, kappa_bound: Some(k) },
        &DisplacementOptions { perturb_seed: Some(3), ..Default::default() },
    )
    .unwrap();
    assert!(out.pair.materialize_target().unwrap().relative_error(&inv).unwrap() < 1e-8);
}

#[test]
fn hankel_inverse_examples() {
    let opts = DisplacementOptions::default();
    let hilbert: Vec<f64> = (0..15).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let h = HankelGen::from_real(&hilbert).unwrap();
    let (inv, k) = dense_inverse(&h);
    let out = hankel_inverse_factor(&h, &opts).unwrap();
    assert!(out.pair.materialize_target().unwrap().relative_error(&inv).unwrap() <= k * 1e-12);

    let mut g = vec![0.0; 15];
    g[7] = 1.0;
    let j = HankelGen::from_real(&g).unwrap();
    let out = hankel_inverse_factor(&j, &opts).unwrap();
    let jm = j.materialize().unwrap();
    assert!(out.pair.materialize_target().unwrap().relative_error(&jm).unwrap() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = random_hankel(&mut rng, 32);
    let k = h.materialize().unwrap().condition_number().unwrap();
    let out = hankel_inverse_factor(&h, &opts).unwrap();
    let x: Vec<C64> = (0..32).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let back = out.pair.apply_gram(&h.matvec(&x).unwrap()).unwrap();
    let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= k * 1e-12 * nx, "err {err}, kappa {k}");

    assert!(matches!(
        hankel_inverse_factor(&HankelGen::zeros(4), &opts),
        Err(Error::Numeric(_))
    ));
}
