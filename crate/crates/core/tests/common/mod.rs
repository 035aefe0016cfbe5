#![allow(dead_code)]

use kronsample::model::{sample_matrix_normal, standard_normal_matrix};
use kronsample::samplers::chain_rng;
use kronsample::{Dataset, DenseMatrix, SeparableState, SpdMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    chain_rng(seed, 1000)
}

pub fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    standard_normal_matrix(r, c, rng)
}

pub fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let a = random_matrix(d, d, rng);
    (&a + a.transpose()) * 0.5
}

/// Random orthogonal matrix from a QR factorization.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    random_matrix(d, d, rng).qr().q()
}

/// SPD with eigenvalues spaced at least `gap` apart, starting at `base`.
pub fn spd_with_gap(d: usize, base: f64, gap: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let q = random_orthogonal(d, rng);
    let mut lam = base;
    let mut diag = Vec::with_capacity(d);
    for _ in 0..d {
        diag.push(lam);
        lam += gap + rng.random::<f64>() * gap;
    }
    let m = &q * DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)) * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// Generic well-conditioned SPD draw.
pub fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let a = random_matrix(d, d, rng);
    let m = &a * a.transpose() / d as f64 + DenseMatrix::identity(d, d) * 0.5;
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

pub fn random_state(d1: usize, d2: usize, rng: &mut ChaCha8Rng) -> SeparableState {
    SeparableState::new(random_spd(d1, rng), random_spd(d2, rng))
}

pub fn random_dataset(d1: usize, d2: usize, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let truth = random_state(d1, d2, rng);
    sample_matrix_normal(&truth, n, rng).unwrap()
}

pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Central differences of `f` along symmetric directions `Eᵢⱼ + Eⱼᵢ`, scaled
/// so the result `G` satisfies `df = tr(G dX)`.
pub fn fd_sym_grad(f: impl Fn(&DenseMatrix) -> f64, x: &DenseMatrix, rel_h: f64) -> DenseMatrix {
    let d = x.nrows();
    let h = rel_h * x.norm().max(1.0);
    let mut g = DenseMatrix::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            let mut e = DenseMatrix::zeros(d, d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let df = (f(&(x + &e * h)) - f(&(x - &e * h))) / (2.0 * h);
            let v = if i == j { df } else { df / 2.0 };
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Max componentwise error relative to the largest gradient entry.
pub fn grad_err(analytic: &DenseMatrix, fd: &DenseMatrix) -> f64 {
    let scale = fd.amax().max(analytic.amax()).max(1e-12);
    (analytic - fd).amax() / scale
}
