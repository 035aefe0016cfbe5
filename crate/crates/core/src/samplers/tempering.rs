use rand::Rng;

use crate::{Error, Result};

/// Geometric ladder `cᵢ = c₁ (1/c₁)^{(i−1)/(n−1)}` of inverse temperatures,
/// ascending from `c₁` to exactly 1.
pub fn tempering_ladder(c1: f64, n_chains: usize) -> Result<Vec<f64>> {
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature floor {c1} must lie in (0, 1]"
        )));
    }
    if n_chains < 2 {
        return Err(Error::InvalidParameter(format!(
            "tempering needs at least 2 chains, got {n_chains}"
        )));
    }
    let last = (n_chains - 1) as f64;
    let mut out: Vec<f64> = (0..n_chains)
        .map(|i| c1 * (1.0 / c1).powf(i as f64 / last))
        .collect();
    out[0] = c1;
    out[n_chains - 1] = 1.0;
    Ok(out)
}

/// Log acceptance ratio `(Hᵢ − Hⱼ)(cᵢ − cⱼ)` for exchanging the states of
/// chains at inverse temperatures `cᵢ, cⱼ` with energies `H = −log π`.
pub fn swap_log_ratio(h_i: f64, h_j: f64, c_i: f64, c_j: f64) -> f64 {
    let r = (h_i - h_j) * (c_i - c_j);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Accepts a swap with probability `min(1, exp(swap_log_ratio))`.
pub fn swap_accept<R: Rng + ?Sized>(h_i: f64, h_j: f64, c_i: f64, c_j: f64, rng: &mut R) -> bool {
    accept_log_ratio(swap_log_ratio(h_i, h_j, c_i, c_j), rng)
}

/// Accepts with probability `min(1, exp(r))`; draws only when `r < 0`.
pub fn accept_log_ratio<R: Rng + ?Sized>(r: f64, rng: &mut R) -> bool {
    if r.is_nan() {
        return false;
    }
    if r >= 0.0 {
        return true;
    }
    rng.random::<f64>() < r.exp()
}
