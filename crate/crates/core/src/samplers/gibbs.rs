use rand::Rng;

use super::TargetDensity;
use crate::model::{sample_inverse_wishart, PriorSpec, SeparableState};
use crate::kron::symm;
use crate::spd::SpdMatrix;
use crate::{Error, Result};

fn iw_params(prior: &PriorSpec) -> Result<(f64, &SpdMatrix)> {
    match prior {
        PriorSpec::InverseWishart { nu, scale } => Ok((*nu, scale)),
        _ => Err(Error::NonConjugatePrior),
    }
}

/// One sweep of the conjugate full conditionals
/// `Σ₁ | Σ₂ ~ IW(ν₁ + d₂n, T₁ + Σₖ tr(Σ₂⁻¹Bₖ) Aₖ)` followed by
/// `Σ₂ | Σ₁ ~ IW(ν₂ + d₁n, T₂ + Σₖ tr(Σ₁⁻¹Aₖ) Bₖ)`.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &SeparableState,
    target: &TargetDensity,
    rng: &mut R,
) -> Result<SeparableState> {
    let (nu1, t1) = iw_params(&target.prior1)?;
    let (nu2, t2) = iw_params(&target.prior2)?;
    let data = &target.data;
    let n = data.n() as f64;
    let (d1, d2) = (data.d1() as f64, data.d2() as f64);
    let pvl = data.pvl();

    let scale1 = SpdMatrix::new(symm(&(t1.matrix() + pvl.contract_b(&state.sigma2.inverse()))))?;
    let sigma1 = sample_inverse_wishart(nu1 + d2 * n, &scale1, rng)?;
    let scale2 = SpdMatrix::new(symm(&(t2.matrix() + pvl.contract_a(&sigma1.inverse()))))?;
    let sigma2 = sample_inverse_wishart(nu2 + d1 * n, &scale2, rng)?;
    Ok(SeparableState { sigma1, sigma2 })
}
