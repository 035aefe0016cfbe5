mod common;

use common::*;
use kronsample::spd::*;
use kronsample::{DenseMatrix, Error, SpdMatrix, TangentVector};

fn diag(v: &[f64]) -> SpdMatrix {
    SpdMatrix::from_diagonal(v).unwrap()
}

fn tangent(m: DenseMatrix) -> TangentVector {
    TangentVector::new(m).unwrap()
}

#[test]
fn constructor_rejects_bad_input() {
    let asym = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(matches!(SpdMatrix::new(asym), Err(Error::NotSymmetric(_))));
    let indef = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(SpdMatrix::new(indef), Err(Error::NotPositiveDefinite(_))));
    let nan = DenseMatrix::from_row_slice(1, 1, &[f64::NAN]);
    assert!(SpdMatrix::new(nan).is_err());
    assert!(SpdMatrix::from_diagonal(&[1.0, -1e-6]).is_err());
    // a zero eigenvalue is within the jitter band
    let j = SpdMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
    assert!(j.matrix()[(1, 1)] > 0.0 && j.matrix()[(1, 1)] <= 1e-12);
}

#[test]
fn eigen_examples() {
    let e = spd_eig(&SpdMatrix::identity(3)).unwrap();
    assert!(e.values.iter().all(|&l| (l - 1.0).abs() < 1e-14));

    let e = spd_eig(&diag(&[1.0, 4.0])).unwrap();
    assert!((e.values[0] - 4.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-14);

    let mut r = rng(10);
    let s = random_spd(5, &mut r);
    let e = spd_eig(&s).unwrap();
    assert!(rel_err(&e.map(|x| x), s.matrix()) < 1e-10);
}

#[test]
fn matrix_function_examples() {
    let r2 = spd_fn(&diag(&[4.0, 9.0]), MatrixFunction::Sqrt).unwrap();
    assert!((r2 - DenseMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0])).amax() < 1e-14);

    let mut r = rng(11);
    let s = random_spd(4, &mut r);
    let log = spd_fn(&s, MatrixFunction::Log).unwrap();
    assert!(rel_err(&sym_exp(&log).unwrap(), s.matrix()) < 1e-9);
    let root = spd_fn(&s, MatrixFunction::Sqrt).unwrap();
    assert!(rel_err(&(&root * &root), s.matrix()) < 1e-12);
    let inv_root = spd_fn(&s, MatrixFunction::InvSqrt).unwrap();
    assert!((&root * &inv_root - DenseMatrix::identity(4, 4)).amax() < 1e-12);
}

#[test]
fn affine_inner_examples() {
    let mut r = rng(12);
    let s1 = tangent(random_sym(3, &mut r));
    let s2 = tangent(random_sym(3, &mut r));
    let at_identity = affine_inner(&SpdMatrix::identity(3), &s1, &s2).unwrap();
    assert!((at_identity - (s1.matrix() * s2.matrix()).trace()).abs() < 1e-12);

    let sigma = random_spd(3, &mut r);
    let a = random_matrix(3, 3, &mut r) + DenseMatrix::identity(3, 3) * 2.0;
    let congr = |m: &DenseMatrix| {
        let x = &a * m * a.transpose();
        (&x + x.transpose()) * 0.5
    };
    let before = affine_inner(&sigma, &s1, &s2).unwrap();
    let after = affine_inner(
        &SpdMatrix::new(congr(sigma.matrix())).unwrap(),
        &tangent(congr(s1.matrix())),
        &tangent(congr(s2.matrix())),
    )
    .unwrap();
    assert!((before - after).abs() < 1e-9 * before.abs().max(1.0));

    let eye = tangent(DenseMatrix::identity(2, 2));
    assert!((affine_inner(&diag(&[2.0, 2.0]), &eye, &eye).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn geodesic_examples() {
    let mut r = rng(13);
    let s0 = random_spd(3, &mut r);
    let v0 = tangent(random_sym(3, &mut r));
    assert!(rel_err(geodesic_step(&s0, &v0, 0.0).unwrap().matrix(), s0.matrix()) < 1e-14);

    let (a, b) = (0.3, -1.2);
    let v = tangent(DenseMatrix::from_diagonal(&nalgebra::dvector![a, b]));
    for t in [0.25, 1.0, 2.0] {
        let (s, w) = geodesic_flow(&SpdMatrix::identity(2), &v, t).unwrap();
        let es = DenseMatrix::from_diagonal(&nalgebra::dvector![(t * a).exp(), (t * b).exp()]);
        assert!((s.matrix() - es).amax() < 1e-13);
        let ew =
            DenseMatrix::from_diagonal(&nalgebra::dvector![a * (t * a).exp(), b * (t * b).exp()]);
        assert!((w.matrix() - ew).amax() < 1e-13);
    }

    // |Σ(t)| = |Σ₀| exp(t tr(Σ₀⁻¹V₀))
    let drift = s0.solve(v0.matrix()).trace();
    for t in [0.1, 0.5, 1.0] {
        let s = geodesic_step(&s0, &v0, t).unwrap();
        let expect = s0.log_det() + t * drift;
        assert!((s.log_det() - expect).abs() < 1e-9 * expect.abs().max(1.0));
    }
}

#[test]
fn velocity_flow_conserves_norm() {
    let mut r = rng(14);
    let s0 = random_spd(4, &mut r);
    let v0 = tangent(random_sym(4, &mut r));
    let n0 = affine_inner(&s0, &v0, &v0).unwrap();
    assert!(rel_err(velocity_flow(&s0, &v0, 0.0).unwrap().matrix(), v0.matrix()) < 1e-14);
    for t in [0.1, 0.5, 1.0] {
        let (s, v) = geodesic_flow(&s0, &v0, t).unwrap();
        let nt = affine_inner(&s, &v, &v).unwrap();
        assert!((nt - n0).abs() < 1e-8 * n0);
    }
}

#[test]
fn log_map_examples() {
    let mut r = rng(15);
    let s0 = random_spd(5, &mut r);
    assert!(spd_log_map(&s0, &s0).unwrap().matrix().amax() < 1e-12);

    let s1 = random_spd(5, &mut r);
    let from_identity = spd_log_map(&SpdMatrix::identity(5), &s1).unwrap();
    let logm = spd_fn(&s1, MatrixFunction::Log).unwrap();
    assert!(rel_err(from_identity.matrix(), &logm) < 1e-10);

    let v = spd_log_map(&s0, &s1).unwrap();
    let back = geodesic_step(&s0, &v, 1.0).unwrap();
    assert!(rel_err(back.matrix(), s1.matrix()) < 1e-8);
}

#[test]
fn geodesic_semigroup() {
    let mut r = rng(16);
    let s0 = random_spd(3, &mut r);
    let v0 = tangent(random_sym(3, &mut r));
    let (sa, va) = geodesic_flow(&s0, &v0, 0.4).unwrap();
    let (sb, vb) = geodesic_flow(&sa, &va, 0.6).unwrap();
    let (sc, vc) = geodesic_flow(&s0, &v0, 1.0).unwrap();
    assert!(rel_err(sb.matrix(), sc.matrix()) < 1e-10);
    assert!(rel_err(vb.matrix(), vc.matrix()) < 1e-9);
}
