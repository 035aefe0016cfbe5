/// Dual-averaging step-size adaptation.
///
/// With `m` the iteration count and `α_m` the acceptance probability:
/// `H̄ₘ = (1 − 1/(m+t₀)) H̄ₘ₋₁ + (a₀ − αₘ)/(m+t₀)`,
/// `log εₘ = μ − √m/γ · H̄ₘ`,
/// `log ε̄ₘ = m^{−κ} log εₘ + (1 − m^{−κ}) log ε̄ₘ₋₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveragingState {
    pub log_eps: f64,
    pub log_eps_bar: f64,
    pub h_bar: f64,
    pub mu: f64,
    pub iteration: usize,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
}

impl DualAveragingState {
    /// Starts from `ε₀` with `μ = log(10 ε₀)`, `γ = 0.05`, `t₀ = 10`, `κ = 0.75`.
    pub fn new(eps0: f64) -> Self {
        Self {
            log_eps: eps0.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            mu: (10.0 * eps0).ln(),
            iteration: 0,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }

    /// Step size to use for the next iteration during adaptation.
    pub fn epsilon(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Step size to freeze once adaptation ends.
    pub fn final_epsilon(&self) -> f64 {
        if self.iteration == 0 {
            self.epsilon()
        } else {
            self.log_eps_bar.exp()
        }
    }

    /// Advances one iteration and returns the next step size.
    pub fn update(&mut self, accept_prob: f64, target_accept: f64) -> f64 {
        let a = if accept_prob.is_finite() { accept_prob.clamp(0.0, 1.0) } else { 0.0 };
        self.iteration += 1;
        let m = self.iteration as f64;
        let w = 1.0 / (m + self.t0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (target_accept - a);
        self.log_eps = self.mu - m.sqrt() / self.gamma * self.h_bar;
        let eta = m.powf(-self.kappa);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
        self.epsilon()
    }
}

/// Functional form of [`DualAveragingState::update`].
pub fn dual_averaging_update(
    da: &DualAveragingState,
    accept_prob: f64,
    target_accept: f64,
) -> (DualAveragingState, f64) {
    let mut next = da.clone();
    let eps = next.update(accept_prob, target_accept);
    (next, eps)
}
