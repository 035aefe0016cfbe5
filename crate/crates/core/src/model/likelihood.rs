use super::{Dataset, SeparableState};
use crate::kron::symm;
use crate::pvl::trace_product;
use crate::{DenseMatrix, Result};

/// Negative log-likelihood up to an additive constant:
/// `(n d₂/2) log|Σ₁| + (n d₁/2) log|Σ₂| + ½ Σₖ tr(Σ₁⁻¹Aₖ) tr(Σ₂⁻¹Bₖ)`.
pub fn nll(state: &SeparableState, data: &Dataset) -> Result<f64> {
    data.check_state(state)?;
    let inv1 = state.sigma1.inverse();
    let inv2 = state.sigma2.inverse();
    Ok(nll_from_parts(state, data, &inv1, &inv2))
}

fn nll_from_parts(
    state: &SeparableState,
    data: &Dataset,
    inv1: &DenseMatrix,
    inv2: &DenseMatrix,
) -> f64 {
    let n = data.n() as f64;
    let (d1, d2) = (data.d1() as f64, data.d2() as f64);
    0.5 * n * d2 * state.sigma1.log_det()
        + 0.5 * n * d1 * state.sigma2.log_det()
        + 0.5 * data.pvl().trace_pair(inv1, inv2)
}

/// Euclidean gradient of [`nll`] with respect to `(Σ₁, Σ₂)`.
pub fn nll_grad(state: &SeparableState, data: &Dataset) -> Result<(DenseMatrix, DenseMatrix)> {
    nll_and_grad(state, data).map(|(_, g1, g2)| (g1, g2))
}

/// [`nll`] and its gradient sharing one pair of inverses.
pub fn nll_and_grad(
    state: &SeparableState,
    data: &Dataset,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    data.check_state(state)?;
    let inv1 = state.sigma1.inverse();
    let inv2 = state.sigma2.inverse();
    let n = data.n() as f64;
    let (d1, d2) = (data.d1() as f64, data.d2() as f64);
    let pvl = data.pvl();

    // Σₖ tr(Σ₂⁻¹Bₖ) Aₖ and Σₖ tr(Σ₁⁻¹Aₖ) Bₖ in a single pass
    let mut c1 = DenseMatrix::zeros(data.d1(), data.d1());
    let mut c2 = DenseMatrix::zeros(data.d2(), data.d2());
    let mut quad = 0.0;
    for (a, b) in pvl.terms() {
        let t1 = trace_product(&inv1, a);
        let t2 = trace_product(&inv2, b);
        c1 += a * t2;
        c2 += b * t1;
        quad += t1 * t2;
    }
    let value = 0.5 * n * d2 * state.sigma1.log_det() + 0.5 * n * d1 * state.sigma2.log_det()
        + 0.5 * quad;
    let g1 = &inv1 * (0.5 * n * d2) - &inv1 * c1 * &inv1 * 0.5;
    let g2 = &inv2 * (0.5 * n * d1) - &inv2 * c2 * &inv2 * 0.5;
    debug_assert!((value - nll_from_parts(state, data, &inv1, &inv2)).abs() <= 1e-8 * value.abs().max(1.0));
    Ok((value, symm(&g1), symm(&g2)))
}
