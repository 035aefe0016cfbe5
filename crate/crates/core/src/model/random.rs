use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{Dataset, SeparableState};
use crate::kron::{symm, vec};
use crate::spd::{sqrt_pair, SpdMatrix};
use crate::{DenseMatrix, DenseVector, Error, Result};

/// `rows × cols` matrix of iid standard normal entries, filled column by column.
pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Draws `n` observations `vec(Σ₂^{1/2} Z Σ₁^{1/2})` with `Z` a `d₂ × d₁`
/// standard normal matrix, so each has covariance `Σ₁ ⊗ Σ₂`.
pub fn sample_matrix_normal_observations<R: Rng + ?Sized>(
    state: &SeparableState,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DenseVector>> {
    let (r1, _) = sqrt_pair(&state.sigma1)?;
    let (r2, _) = sqrt_pair(&state.sigma2)?;
    let (d1, d2) = (state.d1(), state.d2());
    Ok((0..n)
        .map(|_| {
            let z = standard_normal_matrix(d2, d1, rng);
            vec(&(&r2 * z * &r1))
        })
        .collect())
}

/// Simulates a dataset of `n ≥ 1` matrix-normal observations.
pub fn sample_matrix_normal<R: Rng + ?Sized>(
    state: &SeparableState,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let ys = sample_matrix_normal_observations(state, n, rng)?;
    Dataset::from_observations(&ys, state.d1(), state.d2())
}

/// Inverse-Wishart draw `Σ ~ IW(ν, T)`, i.e. `Σ⁻¹ ~ W(ν, T⁻¹)`, via the
/// Bartlett decomposition. Mean `T/(ν − d − 1)` for `ν > d + 1`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    nu: f64,
    t: &SpdMatrix,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let d = t.dim();
    if !(nu > d as f64 - 1.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse-Wishart degrees of freedom {nu} must exceed d - 1"
        )));
    }
    // lower Cholesky factor of T⁻¹
    let l = SpdMatrix::new(t.inverse())?.cholesky().unpack();
    let mut a = DenseMatrix::zeros(d, d);
    for j in 0..d {
        let chi = ChiSquared::new(nu - j as f64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        a[(j, j)] = chi.sample(rng).sqrt();
        for i in (j + 1)..d {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    // W = C Cᵀ with C = L A lower triangular, so Σ = C⁻ᵀ C⁻¹
    let c = l * a;
    let c_inv = c
        .solve_lower_triangular(&DenseMatrix::identity(d, d))
        .ok_or(Error::CholeskyFailure("singular Bartlett factor".into()))?;
    SpdMatrix::new(symm(&(c_inv.transpose() * c_inv)))
}

/// Simulated experiment: `Σᵢ ~ IW(dᵢ + 10, (√γ/dᵢ) I)` and `n` observations
/// drawn under the resulting `Σ₁ ⊗ Σ₂`.
pub fn generate_experiment<R: Rng + ?Sized>(
    d1: usize,
    d2: usize,
    n: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<(SeparableState, Vec<DenseVector>)> {
    let mut factor = |d: usize| -> Result<SpdMatrix> {
        match super::PriorSpec::generation(d, gamma)? {
            super::PriorSpec::InverseWishart { nu, scale } => sample_inverse_wishart(nu, &scale, rng),
            _ => unreachable!("generation prior is inverse-Wishart"),
        }
    };
    let sigma1 = factor(d1)?;
    let sigma2 = factor(d2)?;
    let truth = SeparableState::new(sigma1, sigma2);
    let ys = sample_matrix_normal_observations(&truth, n, rng)?;
    Ok((truth, ys))
}
