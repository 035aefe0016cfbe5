use super::{nll, Dataset, SeparableState};
use crate::spd::SpdMatrix;
use crate::{Error, Result};

/// Outcome of [`flipflop_mle`].
#[derive(Debug, Clone)]
pub struct FlipFlopResult {
    /// Best iterate, normalized so that `|Σ₂| = 1`.
    pub state: SeparableState,
    pub iterations: usize,
    pub converged: bool,
    /// Negative log-likelihood after each half-sweep pair, starting at the
    /// initial `Σ₁ = I` point.
    pub nll_trace: Vec<f64>,
}

impl FlipFlopResult {
    /// The state if converged, otherwise [`Error::MaxIterExceeded`].
    pub fn into_converged(self) -> Result<SeparableState> {
        if self.converged {
            Ok(self.state)
        } else {
            Err(Error::MaxIterExceeded(self.iterations))
        }
    }
}

/// Alternating maximization
/// `Σ̂₂ = (1/(n d₁)) Σᵢ Mᵢ Σ̂₁⁻¹ Mᵢᵀ`, `Σ̂₁ = (1/(n d₂)) Σᵢ Mᵢᵀ Σ̂₂⁻¹ Mᵢ`
/// starting from `Σ̂₁ = I`, evaluated through the Kronecker decomposition.
///
/// Stops when the relative change in [`nll`] falls below `tol`. Running out
/// of iterations is reported through [`FlipFlopResult::converged`].
pub fn flipflop_mle(data: &Dataset, tol: f64, max_iter: usize) -> Result<FlipFlopResult> {
    let (d1, d2, n) = (data.d1(), data.d2(), data.n());
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if n * d2 <= d1 || n * d1 <= d2 {
        return Err(Error::InvalidParameter(format!(
            "flip-flop needs n·d₂ > d₁ and n·d₁ > d₂ (n = {n}, d₁ = {d1}, d₂ = {d2})"
        )));
    }
    let pvl = data.pvl();
    let mut state = SeparableState::identity(d1, d2);
    let mut prev = nll(&state, data)?;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let s2 = pvl.contract_a(&state.sigma1.inverse()) / (n * d1) as f64;
        state.sigma2 = SpdMatrix::new(s2)?;
        let s1 = pvl.contract_b(&state.sigma2.inverse()) / (n * d2) as f64;
        state.sigma1 = SpdMatrix::new(s1)?;
        let cur = nll(&state, data)?;
        trace.push(cur);
        let rel = (prev - cur).abs() / cur.abs().max(1.0);
        prev = cur;
        if rel < tol {
            converged = true;
            break;
        }
    }
    Ok(FlipFlopResult {
        state: normalize_component(&state)?,
        iterations,
        converged,
        nll_trace: trace,
    })
}

/// Rescales to `(Σ₁·|Σ₂|^{1/d₂}, Σ₂/|Σ₂|^{1/d₂})`, leaving `Σ₁ ⊗ Σ₂` unchanged.
pub fn normalize_component(state: &SeparableState) -> Result<SeparableState> {
    let c = (state.sigma2.log_det() / state.d2() as f64).exp();
    Ok(SeparableState {
        sigma1: state.sigma1.scaled(c)?,
        sigma2: state.sigma2.scaled(1.0 / c)?,
    })
}

