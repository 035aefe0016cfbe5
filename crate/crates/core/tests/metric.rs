mod common;

use common::*;
use kronsample::kron::{duplication, vech_len};
use kronsample::metric::*;
use kronsample::{DenseMatrix, DenseVector, SeparableState, SpdMatrix, TangentVector};

const KINDS: [MetricKind; 4] = [
    MetricKind::Regularized { alpha: 0.95 },
    MetricKind::Orthogonalized,
    MetricKind::Weighted { omega: 0.5 },
    MetricKind::Product,
];

fn random_pair(d1: usize, d2: usize, r: &mut rand_chacha::ChaCha8Rng) -> TangentPair {
    TangentPair::new(
        TangentVector::from_symmetrized(&random_sym(d1, r)),
        TangentVector::from_symmetrized(&random_sym(d2, r)),
    )
}

fn constraint_value(state: &SeparableState, v: &TangentPair) -> f64 {
    state.sigma2.solve(v.v2.matrix()).trace()
}

#[test]
fn projection_examples() {
    let mut r = rng(50);
    let s = random_spd(3, &mut r);
    let scale_dir = TangentVector::new(s.matrix().clone()).unwrap();
    assert!(project_tangent(&s, &scale_dir).matrix().amax() < 1e-12);

    let v = TangentVector::from_symmetrized(&random_sym(3, &mut r));
    let p = project_tangent(&s, &v);
    assert!(s.solve(p.matrix()).trace().abs() < 1e-12);
    let pp = project_tangent(&s, &p);
    assert!((pp.matrix() - p.matrix()).norm() < 1e-12);
}

#[test]
fn kinetic_examples() {
    let mut r = rng(51);
    let id = SeparableState::identity(2, 3);
    for kind in KINDS {
        assert_eq!(kinetic_energy(kind, &id, &TangentPair::zeros(2, 3)).unwrap(), 0.0);
    }
    let v = random_pair(2, 3, &mut r);
    let expect = 0.5 * ((v.v1.matrix() * v.v1.matrix()).trace() + (v.v2.matrix() * v.v2.matrix()).trace());
    let k = kinetic_energy(MetricKind::Product, &id, &v).unwrap();
    assert!((k - expect).abs() < 1e-12);

    let s = random_state(2, 3, &mut r);
    for kind in KINDS {
        let g = build_metric_tensor(kind, &s).unwrap();
        let x = v.to_vech();
        let dense = 0.5 * (x.transpose() * g * &x)[(0, 0)];
        let k = kinetic_energy(kind, &s, &v).unwrap();
        assert!((k - dense).abs() < 1e-10 * dense, "{kind:?}");
    }
    assert!(kinetic_energy(MetricKind::Product, &s, &TangentPair::zeros(3, 2)).is_err());
}

#[test]
fn kinetic_is_nonnegative_when_ill_conditioned() {
    let big = SpdMatrix::from_diagonal(&[1e150, 1e-150]).unwrap();
    let s = SeparableState::new(big.clone(), big);
    let v = TangentPair::new(
        TangentVector::new(DenseMatrix::from_row_slice(2, 2, &[1e150, 1.0, 1.0, 1e-150])).unwrap(),
        TangentVector::zeros(2),
    );
    for kind in KINDS {
        let k = kinetic_energy(kind, &s, &v).unwrap();
        assert!(k >= 0.0, "{kind:?}: {k}");
    }
}

#[test]
fn velocity_covariance_matches_inverse_tensor() {
    let mut r = rng(52);
    let kind = MetricKind::Regularized { alpha: 0.9 };
    let s = random_state(2, 2, &mut r);
    let g_inv = build_metric_tensor(kind, &s).unwrap().try_inverse().unwrap();
    let draws = 100_000;
    let m = g_inv.nrows();
    let mut acc = DenseMatrix::zeros(m, m);
    let metric = LocalMetric::new(kind, &s).unwrap();
    for _ in 0..draws {
        let x = metric.sample_velocity(&mut r).unwrap().to_vech();
        acc.ger(1.0, &x, &x, 1.0);
    }
    let cov = acc / draws as f64;
    let tol = 0.05 * g_inv.diagonal().max();
    assert!((cov - &g_inv).amax() < tol);
}

#[test]
fn product_velocity_variances_at_identity() {
    let mut r = rng(53);
    let s = SeparableState::identity(2, 2);
    let draws = 100_000;
    let (mut diag, mut off) = (0.0, 0.0);
    for _ in 0..draws {
        let v = sample_velocity(MetricKind::Product, &s, &mut r).unwrap();
        diag += v.v1.matrix()[(0, 0)].powi(2);
        off += v.v1.matrix()[(1, 0)].powi(2);
    }
    let (diag, off) = (diag / draws as f64, off / draws as f64);
    assert!((diag - 1.0).abs() < 0.05 && (off - 0.5).abs() < 0.025, "{diag} {off}");
}

#[test]
fn constrained_velocities_are_trace_free() {
    let mut r = rng(54);
    let s = random_state(3, 2, &mut r);
    for kind in [MetricKind::Orthogonalized, MetricKind::Weighted { omega: 0.3 }] {
        for _ in 0..50 {
            let v = sample_velocity(kind, &s, &mut r).unwrap();
            assert!(constraint_value(&s, &v).abs() < 1e-12);
        }
    }
}

#[test]
fn riemannian_gradient_examples() {
    let mut r = rng(55);
    let id = SeparableState::identity(2, 3);
    let (e1, e2) = (random_sym(2, &mut r), random_sym(3, &mut r));
    let g = riemannian_grad(MetricKind::Product, &id, (&e1, &e2)).unwrap();
    assert!((g.v1.matrix() - &e1).amax() < 1e-14 && (g.v2.matrix() - &e2).amax() < 1e-14);

    // unconstrained kinds: Ĝ x = D̄ᵀ vec(E)
    let s = random_state(2, 3, &mut r);
    for kind in [MetricKind::Regularized { alpha: 0.95 }, MetricKind::Product] {
        let g = riemannian_grad(kind, &s, (&e1, &e2)).unwrap();
        let dense = build_metric_tensor(kind, &s).unwrap().lu().solve(&vech_dual(&e1, &e2)).unwrap();
        let got = g.to_vech();
        assert!((&got - &dense).norm() < 1e-9 * dense.norm(), "{kind:?}");
    }

    // constrained: Ĝ-orthogonal projection of Ĝ⁻¹g onto cᵀx = 0
    let kind = MetricKind::Orthogonalized;
    let g_hat = build_metric_tensor(kind, &s).unwrap();
    let lu = g_hat.lu();
    let free = lu.solve(&vech_dual(&e1, &e2)).unwrap();
    let c = vech_dual(&DenseMatrix::zeros(2, 2), &s.sigma2.inverse());
    let gc = lu.solve(&c).unwrap();
    let dense = &free - &gc * (c.dot(&free) / c.dot(&gc));
    let got = riemannian_grad(kind, &s, (&e1, &e2)).unwrap().to_vech();
    assert!((&got - &dense).norm() < 1e-9 * dense.norm());

    let w1 = riemannian_grad(MetricKind::Weighted { omega: 1.0 }, &s, (&e1, &e2)).unwrap();
    let o = riemannian_grad(MetricKind::Orthogonalized, &s, (&e1, &e2)).unwrap();
    assert!((w1.v1.matrix() - o.v1.matrix()).amax() < 1e-14);
}

#[test]
fn regularized_tensor_regularity() {
    let mut r = rng(56);
    for (d1, d2) in [(2, 2), (2, 3)] {
        for _ in 0..20 {
            let s = random_state(d1, d2, &mut r);
            for alpha in [0.0, 0.5, 0.9, 0.95] {
                let g = build_metric_tensor(MetricKind::Regularized { alpha }, &s).unwrap();
                let min = g.symmetric_eigenvalues().min();
                assert!(min > 0.0, "alpha {alpha}: {min}");
            }
            let g = build_metric_tensor(MetricKind::Regularized { alpha: 1.0 }, &s).unwrap();
            let scale = g.norm().powi(g.nrows() as i32);
            assert!(g.determinant().abs() < 1e-8 * scale);
        }
    }
}

#[test]
fn product_tensor_at_identity_is_duplication_gram() {
    let g = build_metric_tensor(MetricKind::Product, &SeparableState::identity(2, 3)).unwrap();
    let (d2, d3) = (duplication(2), duplication(3));
    let (m1, m2) = (vech_len(2), vech_len(3));
    let mut expect = DenseMatrix::zeros(m1 + m2, m1 + m2);
    expect.view_mut((0, 0), (m1, m1)).copy_from(&(d2.dup.transpose() * &d2.dup));
    expect.view_mut((m1, m1), (m2, m2)).copy_from(&(d3.dup.transpose() * &d3.dup));
    assert!((g - expect).amax() < 1e-15);
}

#[test]
fn logdet_examples() {
    let mut r = rng(57);
    for kind in KINDS {
        assert_eq!(metric_logdet(kind, &SeparableState::identity(2, 3)), 0.0);
    }
    let (a, b) = (random_state(2, 2, &mut r), random_state(2, 2, &mut r));
    let dense = |s: &SeparableState| build_metric_tensor(MetricKind::Product, s).unwrap().determinant().ln();
    let diff = metric_logdet(MetricKind::Product, &a) - metric_logdet(MetricKind::Product, &b);
    assert!((diff - (dense(&a) - dense(&b))).abs() < 1e-6);

    let moved = SeparableState::new(a.sigma1.clone(), b.sigma2.clone());
    assert_eq!(metric_logdet(MetricKind::Orthogonalized, &a), metric_logdet(MetricKind::Orthogonalized, &moved));
}

#[test]
fn logdet_gradient_examples() {
    let mut r = rng(58);
    let s = random_state(2, 3, &mut r);
    let (g1, g2) = metric_grad_logdet(MetricKind::Product, &s);
    let f1 = |m: &DenseMatrix| {
        metric_logdet(MetricKind::Product, &SeparableState::new(SpdMatrix::new(m.clone()).unwrap(), s.sigma2.clone()))
    };
    let f2 = |m: &DenseMatrix| {
        metric_logdet(MetricKind::Product, &SeparableState::new(s.sigma1.clone(), SpdMatrix::new(m.clone()).unwrap()))
    };
    assert!(grad_err(&g1, &fd_sym_grad(f1, s.sigma1.matrix(), 1e-6)) < 1e-6);
    assert!(grad_err(&g2, &fd_sym_grad(f2, s.sigma2.matrix(), 1e-6)) < 1e-6);

    for kind in [MetricKind::Orthogonalized, MetricKind::Weighted { omega: 0.2 }] {
        assert_eq!(metric_grad_logdet(kind, &s).1, DenseMatrix::zeros(3, 3));
    }
    let scalar = SeparableState::new(SpdMatrix::from_diagonal(&[2.5]).unwrap(), SpdMatrix::identity(2));
    let (g1, _) = metric_grad_logdet(MetricKind::Product, &scalar);
    assert!((g1[(0, 0)] + 2.0 / 2.5).abs() < 1e-15);
}

#[test]
fn vech_round_trip_of_pairs() {
    let mut r = rng(59);
    let v = random_pair(3, 2, &mut r);
    let back = TangentPair::from_vech(&v.to_vech(), 3, 2).unwrap();
    assert_eq!(back, v);
    assert!(TangentPair::from_vech(&DenseVector::zeros(5), 3, 2).is_err());
}

#[test]
fn kind_validation() {
    assert!(MetricKind::Regularized { alpha: 1.0 }.validate().is_err());
    assert!(MetricKind::Regularized { alpha: -0.1 }.validate().is_err());
    assert!(MetricKind::Weighted { omega: 0.0 }.validate().is_err());
    assert!(MetricKind::Weighted { omega: 1.0 }.validate().is_err());
    assert!(MetricKind::Weighted { omega: 0.5 }.validate().is_ok());
    assert!(MetricKind::Orthogonalized.is_constrained());
    assert!(!MetricKind::Product.is_constrained());
}
