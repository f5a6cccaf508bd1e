use proptest::prelude::*;
use symfact::displacement::{displacement_factor, DisplacementInput, DisplacementOptions};
use symfact::hankel::hankel_factor;
use symfact::krylov::{apply_k, apply_k_transpose, random_sparse, KrylovSpec};
use symfact::sos::{gram_hankel, sos_decompose, verify_decomposition, Polynomial};
use symfact::structured::{is_bisymmetric, key_identity_split, is_skew_symmetric};
use symfact::toeplitz::{hermitian_toeplitz_factor, rank2_factor, BorderedCross};
use symfact::{DenseMatrix, FactorNode, FactorPair, HankelGen, StructuredOp, ToeplitzGen, C64};

fn cvec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn hankel_strategy(max_order: usize) -> impl Strategy<Value = HankelGen> {
    (1..=max_order).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, 2 * n - 1).prop_map(|g| HankelGen::from_real(&g).unwrap())
    })
}

fn toeplitz_strategy(max_order: usize) -> impl Strategy<Value = ToeplitzGen> {
    (1..=max_order).prop_flat_map(|n| {
        (-1.0f64..1.0, cvec(n - 1..n)).prop_map(|(d, mut rest)| {
            rest.insert(0, C64::new(d, 0.0));
            ToeplitzGen::new(rest).unwrap()
        })
    })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn rel_vec(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    d / s.max(1e-300)
}

fn pair_error(p: &FactorPair, target: &DenseMatrix) -> f64 {
    let r = p.materialize_target().unwrap();
    let diff = r.sub(target).unwrap().frobenius_norm();
    diff / target.frobenius_norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hankel_matvec_matches_dense(h in hankel_strategy(40), seed in any::<u64>()) {
        let n = h.order();
        let x: Vec<C64> = (0..n).map(|i| C64::new(((seed >> (i % 60)) & 7) as f64 - 3.0, i as f64 * 0.1)).collect();
        let fast = h.matvec(&x).unwrap();
        let dense = h.materialize().unwrap().matvec(&x).unwrap();
        prop_assert!(rel_vec(&fast, &dense) <= 1e-12 || fast.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn toeplitz_matvec_matches_dense(t in toeplitz_strategy(40), x in cvec(40..41)) {
        let x = &x[..t.order()];
        let fast = t.matvec(x).unwrap();
        let dense = t.materialize().unwrap().matvec(x).unwrap();
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()) * t.order() as f64);
        }
    }

    #[test]
    fn toeplitz_factor_reconstructs(t in toeplitz_strategy(48)) {
        let p = hermitian_toeplitz_factor(&t).unwrap();
        let m = t.materialize().unwrap();
        if m.frobenius_norm() > 0.0 {
            prop_assert!(pair_error(&p, &m) <= 1e-10);
        }
    }

    #[test]
    fn hankel_factor_reconstructs(h in hankel_strategy(40)) {
        let p = hankel_factor(&h).unwrap();
        let n = p.nrows() as f64;
        let bound = 4.0 * n * (n.log2() + 1.0);
        prop_assert!(p.b.ncols() as f64 <= bound && p.c.ncols() as f64 <= bound);
        let m = h.materialize().unwrap();
        if m.frobenius_norm() > 0.0 {
            prop_assert!(pair_error(&p, &m) <= 1e-8);
        }
    }

    #[test]
    fn gram_apply_matches_target(h in hankel_strategy(33), x in cvec(33..34)) {
        let p = hankel_factor(&h).unwrap();
        let x = &x[..h.order()];
        let got = p.apply_gram(x).unwrap();
        let want = h.matvec(x).unwrap();
        let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn key_identity_split_structure(h in hankel_strategy(64)) {
        let s = key_identity_split(&h).unwrap();
        let re = s.real_part.materialize().unwrap();
        prop_assert!(is_bisymmetric(&re, Some(1e-12)));
        let sk = s.skew_materialize().unwrap();
        prop_assert!(is_skew_symmetric(&sk, Some(1e-12)));
        for i in 0..sk.rows() {
            prop_assert_eq!(sk[(i, i)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rank2_cross_eigenvalues(row in cvec(2..40), border_seed in any::<usize>()) {
        let n = row.len();
        let b = border_seed % n;
        let mut row = row;
        row[b] = C64::new(0.0, 0.0);
        let cross = BorderedCross::new(b, row.clone()).unwrap();
        let (v1, v2) = rank2_factor(&cross);
        let rec = DenseMatrix::from_fn(n, n, |i, j| v1[i] * v1[j].conj() - v2[i] * v2[j].conj());
        prop_assert!(rec.sub(&cross.to_dense()).unwrap().max_abs() <= 1e-12);
        let lambda = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (vals, _) = cross.to_dense().hermitian_eigen().unwrap();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!((hi - lambda).abs() <= 1e-12 * lambda.max(1.0));
        prop_assert!((lo + lambda).abs() <= 1e-12 * lambda.max(1.0));
    }

    #[test]
    fn structured_op_adjoints(k in 1usize..6, level_seed in any::<usize>(), x in cvec(32..33), y in cvec(32..33)) {
        let n = 1usize << k;
        let x = &x[..n];
        let y = &y[..n];
        let level = 1 + level_seed % k;
        let block = 1usize << (level_seed % (k + 1));
        let ops = [
            StructuredOp::Exchange { n },
            StructuredOp::ShiftDown { n },
            StructuredOp::FoldUnitary { n },
            StructuredOp::BlockFoldUnitary { n, level },
            StructuredOp::MaskE { n, level },
            StructuredOp::SwapF { n, level },
            StructuredOp::BlockShift { n, block },
            StructuredOp::OddBlockExchange { n, block },
        ];
        for op in ops {
            let ax = op.apply(x).unwrap();
            let aty = op.apply_adjoint(y).unwrap();
            prop_assert!((dot(&ax, y) - dot(x, &aty)).norm() <= 1e-12 * n as f64);
        }
        for op in [StructuredOp::FoldUnitary { n }, StructuredOp::BlockFoldUnitary { n, level }] {
            let back = op.apply_adjoint(&op.apply(x).unwrap()).unwrap();
            prop_assert!(rel_vec(&back, x) <= 1e-14);
        }
    }

    #[test]
    fn factor_serialization_round_trip(h in hankel_strategy(20)) {
        let p = hankel_factor(&h).unwrap();
        let back = FactorPair::from_json(&p.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &p);
        let node = FactorNode::from_json(&p.b.to_json().unwrap()).unwrap();
        prop_assert_eq!(node, p.b.clone());
    }

    #[test]
    fn sos_gram_identity_and_certificate(half in 0usize..9, coeffs in prop::collection::vec(-2.0f64..2.0, 17), x in -1.2f64..1.2) {
        let p = Polynomial::new(coeffs[..2 * half + 1].to_vec()).unwrap();
        let h = gram_hankel(&p).unwrap();
        let v: Vec<C64> = (0..=half).map(|i| C64::new(x.powi(i as i32), 0.0)).collect();
        let hv = h.matvec(&v).unwrap();
        let q: f64 = v.iter().zip(&hv).map(|(a, b)| (a * b).re).sum();
        let scale: f64 = p.coeffs().iter().enumerate().map(|(i, a)| a.abs() * x.abs().powi(i as i32)).sum::<f64>().max(1e-3);
        prop_assert!((q - p.eval(x)).abs() <= 1e-10 * scale);
        let terms = sos_decompose(&p).unwrap();
        prop_assert!(verify_decomposition(&p, &terms) <= 1e-9 * p.max_abs_coeff().max(1e-300));
    }

    #[test]
    fn krylov_adjoint_identity(seed in any::<u64>(), x in prop::collection::vec(-1.0f64..1.0, 32), y in prop::collection::vec(-1.0f64..1.0, 32)) {
        let spec = KrylovSpec::new(random_sparse(32, 32, 4, seed), random_sparse(32, 8, 2, seed ^ 1), 4).unwrap();
        let xm = DenseMatrix::from_fn(32, 1, |i, _| C64::new(x[i], 0.0));
        let ym = DenseMatrix::from_fn(32, 1, |i, _| C64::new(y[i], 0.0));
        let (kx, _) = apply_k(&spec, &xm).unwrap();
        let (kty, _) = apply_k_transpose(&spec, &ym).unwrap();
        let lhs: f64 = (0..32).map(|i| kx[(i, 0)].re * y[i]).sum();
        let rhs: f64 = (0..32).map(|i| x[i] * kty[(i, 0)].re).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn displacement_factor_of_hankel(g in prop::collection::vec(-1.0f64..1.0, 31)) {
        let h = HankelGen::from_real(&g).unwrap();
        let m = h.materialize().unwrap();
        let out = displacement_factor(
            &DisplacementInput { matrix: m.clone(), rank: 2, kappa_bound: None },
            &DisplacementOptions::default(),
        ).unwrap();
        prop_assert!(pair_error(&out.pair, &m) <= 1e-9);
        prop_assert_eq!(out.report.eigendecompositions, out.report.levels + 1);
    }
}
