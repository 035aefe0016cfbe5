use serde::{Deserialize, Serialize};

use crate::kron::symm;
use crate::metric::{metric_grad_logdet, metric_logdet, MetricKind};
use crate::model::{nll_and_grad, Dataset, PriorSpec, SeparableState};
use crate::spd::SpdMatrix;
use crate::{DenseMatrix, Error, Result};

/// Default coefficient on [`metric_logdet`] in the sampled log-density.
///
/// The position-velocity flow of the integrator preserves `|Ĝ(q)| dq dv`, so
/// sampling a Lebesgue density `p` over vech coordinates requires the target
/// `log p − ½ log|Ĝ|`.
pub const HAUSDORFF_WEIGHT: f64 = -0.5;

/// Density sampled on the slice `|Σ₂| = 1` by the constrained metrics.
///
/// `Restricted` evaluates the posterior on the slice as is. `Marginal`
/// integrates the posterior over the scale orbit `(Σ₁/s, sΣ₂)`, `s > 0`,
/// which is the law of normalized unconstrained draws; it needs
/// inverse-Wishart priors on both factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceDensity {
    Restricted,
    Marginal,
}

/// Posterior plus metric: everything the geodesic sampler needs to evaluate.
#[derive(Debug, Clone)]
pub struct TargetDensity {
    pub data: Dataset,
    pub prior1: PriorSpec,
    pub prior2: PriorSpec,
    pub metric: MetricKind,
    /// Coefficient on `metric_logdet`; never tempered.
    pub hausdorff_weight: f64,
    slice: SliceDensity,
}

/// A full evaluation of the target at one state.
#[derive(Debug, Clone)]
pub struct TargetEval {
    /// `c·(ℓ + log p₁ + log p₂) + w·log|Ĝ|`, or its scale-orbit integral
    /// for the marginal slice density.
    pub log_target: f64,
    /// Untempered `ℓ + log p₁ + log p₂`.
    pub log_post: f64,
    pub grad1: DenseMatrix,
    pub grad2: DenseMatrix,
}

impl TargetDensity {
    /// Uses the marginal slice density when both priors are inverse-Wishart
    /// and the restricted one otherwise.
    pub fn new(data: Dataset, prior1: PriorSpec, prior2: PriorSpec, metric: MetricKind) -> Result<Self> {
        metric.validate()?;
        prior1.validate(data.d1())?;
        prior2.validate(data.d2())?;
        let slice = if prior1.is_conjugate() && prior2.is_conjugate() {
            SliceDensity::Marginal
        } else {
            SliceDensity::Restricted
        };
        Ok(Self { data, prior1, prior2, metric, hausdorff_weight: HAUSDORFF_WEIGHT, slice })
    }

    pub fn with_slice(self, slice: SliceDensity) -> Result<Self> {
        if slice == SliceDensity::Marginal && !(self.prior1.is_conjugate() && self.prior2.is_conjugate()) {
            return Err(Error::NonConjugatePrior);
        }
        Ok(Self { slice, ..self })
    }

    pub fn slice(&self) -> SliceDensity {
        self.slice
    }

    fn marginal(&self) -> bool {
        self.slice == SliceDensity::Marginal && self.metric.is_constrained()
    }

    pub fn d1(&self) -> usize {
        self.data.d1()
    }

    pub fn d2(&self) -> usize {
        self.data.d2()
    }

    /// Same data and priors under a different metric.
    pub fn with_metric(&self, metric: MetricKind) -> Result<Self> {
        metric.validate()?;
        Ok(Self { metric, ..self.clone() })
    }

    /// Log-likelihood plus log-priors, without the metric term.
    pub fn log_posterior(&self, state: &SeparableState) -> Result<f64> {
        let (nll, _, _) = nll_and_grad(state, &self.data)?;
        let (p1, _) = self.prior1.logpdf_grad(&state.sigma1)?;
        let (p2, _) = self.prior2.logpdf_grad(&state.sigma2)?;
        finite(p1 + p2 - nll)
    }

    /// Evaluation at inverse temperature `beta`.
    pub fn eval_tempered(&self, state: &SeparableState, beta: f64) -> Result<TargetEval> {
        if self.marginal() {
            return self.eval_marginal(state, beta);
        }
        let (nll, g1, g2) = nll_and_grad(state, &self.data)?;
        let (p1, pg1) = self.prior1.logpdf_grad(&state.sigma1)?;
        let (p2, pg2) = self.prior2.logpdf_grad(&state.sigma2)?;
        let (mg1, mg2) = metric_grad_logdet(self.metric, state);
        let w = self.hausdorff_weight;
        let log_post = finite(p1 + p2 - nll)?;
        let log_target = finite(beta * log_post + w * metric_logdet(self.metric, state))?;
        let grad1 = symm(&((pg1 - g1) * beta + mg1 * w));
        let grad2 = symm(&((pg2 - g2) * beta + mg2 * w));
        if grad1.iter().chain(grad2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(TargetEval { log_target, log_post, grad1, grad2 })
    }

    /// With `Σ₁ → Σ₁/s`, `Σ₂ → sΣ₂` and `u = log s`, the tempered
    /// inverse-Wishart priors times `|Ĝ|^w` collapse to
    /// `|Σ₁|^{−a₁} |Σ₂|^{−a₂} ∫ exp(λu − ½c(A eᵘ + B e⁻ᵘ)) du` with
    /// `A = tr(T₁Σ₁⁻¹)`, `B = tr(T₂Σ₂⁻¹)` and `λ = a₁d₁ − a₂d₂`.
    fn eval_marginal(&self, state: &SeparableState, beta: f64) -> Result<TargetEval> {
        let (PriorSpec::InverseWishart { nu: nu1, scale: t1 }, PriorSpec::InverseWishart { nu: nu2, scale: t2 }) =
            (&self.prior1, &self.prior2)
        else {
            return Err(Error::NonConjugatePrior);
        };
        self.data.check_state(state)?;
        let (nll, g1, g2) = nll_and_grad(state, &self.data)?;
        let w = self.hausdorff_weight;
        let (d1, d2) = (state.d1() as f64, state.d2() as f64);
        let a1 = beta * 0.5 * (nu1 + d1 + 1.0) + w * (d1 + 1.0);
        let a2 = beta * 0.5 * (nu2 + d2 + 1.0) + w * (d2 + 1.0);
        let part = |sigma: &SpdMatrix, t: &SpdMatrix| {
            let inv = sigma.inverse();
            let ti = t.matrix() * &inv;
            let dt = -(&inv * &ti);
            (inv, ti.trace(), dt)
        };
        let (inv1, a, da) = part(&state.sigma1, t1);
        let (inv2, b, db) = part(&state.sigma2, t2);
        let orbit = scale_orbit(a1 * d1 - a2 * d2, beta * a, beta * b)?;
        let log_target = finite(
            -beta * nll - a1 * state.sigma1.log_det() - a2 * state.sigma2.log_det() + orbit.log_value,
        )?;
        let grad1 = symm(&(-g1 * beta - inv1 * a1 - da * (0.5 * beta * orbit.mean_exp)));
        let grad2 = symm(&(-g2 * beta - inv2 * a2 - db * (0.5 * beta * orbit.mean_exp_neg)));
        if grad1.iter().chain(grad2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(TargetEval { log_target, log_post: self.log_posterior(state)?, grad1, grad2 })
    }

    /// Log acceptance ratio for exchanging states `x` (at `c_x`) and `y` (at
    /// `c_y`), given their untempered log-posteriors.
    pub fn swap_log_ratio(
        &self,
        x: (&SeparableState, f64, f64),
        y: (&SeparableState, f64, f64),
    ) -> Result<f64> {
        let ((sx, lpx, cx), (sy, lpy, cy)) = (x, y);
        if !self.marginal() {
            return Ok(super::swap_log_ratio(-lpx, -lpy, cx, cy));
        }
        let lt = |s: &SeparableState, c: f64| self.eval_tempered(s, c).map(|e| e.log_target);
        Ok(lt(sy, cx)? + lt(sx, cy)? - lt(sx, cx)? - lt(sy, cy)?)
    }

    /// Untempered evaluation.
    pub fn eval(&self, state: &SeparableState) -> Result<TargetEval> {
        self.eval_tempered(state, 1.0)
    }
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite)
    }
}

/// `log π(q)` and its Euclidean gradient `(∂/∂Σ₁, ∂/∂Σ₂)`.
pub fn target_eval(
    target: &TargetDensity,
    state: &SeparableState,
) -> Result<(f64, (DenseMatrix, DenseMatrix))> {
    let e = target.eval(state)?;
    Ok((e.log_target, (e.grad1, e.grad2)))
}

/// `log ∫ exp(f(u)) du` for `f(u) = λu − ½(A eᵘ + B e⁻ᵘ)`, with the means of
/// `eᵘ` and `e⁻ᵘ` under the normalized integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleOrbit {
    pub log_value: f64,
    pub mean_exp: f64,
    pub mean_exp_neg: f64,
}

const ORBIT_DROP: f64 = 60.0;
const ORBIT_MAX_NODES: usize = 200_000;

/// Trapezoid rule on a grid centered at the mode; `f` is strictly concave,
/// so the grid stops once it falls `ORBIT_DROP` below the peak.
pub fn scale_orbit(lambda: f64, a: f64, b: f64) -> Result<ScaleOrbit> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale orbit needs A, B > 0, got {a}, {b}")));
    }
    let r = lambda.hypot(a.sqrt() * b.sqrt());
    // mode: A e^{2u} − 2λ eᵘ − B = 0
    let u0 = if lambda >= 0.0 { ((lambda + r) / a).ln() } else { (b / (r - lambda)).ln() };
    let f = |u: f64| lambda * u - 0.5 * (a * u.exp() + b * (-u).exp());
    let curv = 0.5 * (a * u0.exp() + b * (-u0).exp());
    // the integrand is analytic for |Im u| < π/2, so a step below 0.2 keeps
    // the trapezoid error under e^{-45}
    let h = (0.25 / curv.sqrt()).min(0.2);
    let f0 = f(u0);
    let (mut z, mut m1, mut m2) = (1.0, u0.exp(), (-u0).exp());
    for dir in [-1.0, 1.0] {
        let mut k = 1;
        loop {
            let u = u0 + dir * h * k as f64;
            let e = (f(u) - f0).exp();
            z += e;
            m1 += e * u.exp();
            m2 += e * (-u).exp();
            if f(u) < f0 - ORBIT_DROP {
                break;
            }
            k += 1;
            if k > ORBIT_MAX_NODES {
                return Err(Error::MaxIterExceeded(ORBIT_MAX_NODES));
            }
        }
    }
    Ok(ScaleOrbit { log_value: f0 + (h * z).ln(), mean_exp: m1 / z, mean_exp_neg: m2 / z })
}
