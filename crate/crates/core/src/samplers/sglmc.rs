use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{TargetDensity, TargetEval};
use crate::metric::{LocalMetric, MetricKind, TangentPair};
use crate::model::SeparableState;
use crate::spd::{geodesic_flow, spd_log_map};
use crate::{Error, Result};

/// Hard cap on dynamic trajectory length.
pub const DYNAMIC_MAX_STEPS: usize = 1024;

/// How many integrator steps a proposal takes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LeapfrogPolicy {
    Fixed { steps: usize },
    /// Integrate until [`dynamic_termination`] says stop, at most `max_steps`
    /// (itself capped at [`DYNAMIC_MAX_STEPS`]).
    Dynamic { max_steps: usize },
}

impl Default for LeapfrogPolicy {
    fn default() -> Self {
        LeapfrogPolicy::Fixed { steps: 10 }
    }
}

/// One transition of a chain.
#[derive(Debug, Clone)]
pub struct ChainSample {
    pub state: SeparableState,
    pub accepted: bool,
    /// `h* − h`; `+∞` when the proposal failed numerically.
    pub delta_energy: f64,
    pub accept_prob: f64,
    pub epsilon: f64,
    pub steps: usize,
    /// Untempered log-posterior at `state`.
    pub log_post: f64,
}

/// Position, velocity and cached evaluations along a trajectory.
struct Point {
    state: SeparableState,
    v: TangentPair,
    eval: TargetEval,
    grad: TangentPair,
}

fn riemannian_at(target: &TargetDensity, state: &SeparableState, eval: &TargetEval) -> Result<TangentPair> {
    LocalMetric::new(target.metric, state)?.riemannian_grad(&eval.grad1, &eval.grad2)
}

fn kick(metric: &LocalMetric, v: &TangentPair, grad: &TangentPair, h: f64) -> TangentPair {
    metric.constrain(v.add_scaled(grad, h))
}

/// One kick–geodesic–kick step of size `eps`.
fn step(target: &TargetDensity, beta: f64, p: Point, eps: f64) -> Result<Point> {
    let metric0 = LocalMetric::new(target.metric, &p.state)?;
    let v_half = kick(&metric0, &p.v, &p.grad, 0.5 * eps);
    let (s1, w1) = geodesic_flow(&p.state.sigma1, &v_half.v1, eps)?;
    let (s2, w2) = geodesic_flow(&p.state.sigma2, &v_half.v2, eps)?;
    let state = SeparableState::new(s1, s2);
    let eval = target.eval_tempered(&state, beta)?;
    let metric1 = LocalMetric::new(target.metric, &state)?;
    let grad = metric1.riemannian_grad(&eval.grad1, &eval.grad2)?;
    let v = kick(&metric1, &TangentPair::new(w1, w2), &grad, 0.5 * eps);
    Ok(Point { state, v, eval, grad })
}

/// Deterministic integration of `steps` steps from `(state, v)` at inverse
/// temperature `beta`.
pub fn leapfrog(
    target: &TargetDensity,
    beta: f64,
    state: &SeparableState,
    v: &TangentPair,
    eps: f64,
    steps: usize,
) -> Result<(SeparableState, TangentPair)> {
    let eval = target.eval_tempered(state, beta)?;
    let grad = riemannian_at(target, state, &eval)?;
    let mut p = Point { state: state.clone(), v: v.clone(), eval, grad };
    for _ in 0..steps {
        p = step(target, beta, p, eps)?;
    }
    Ok((p.state, p.v))
}

/// Total energy `h = −log π(q) + ½⟨v, v⟩_q`.
pub fn hamiltonian(
    target: &TargetDensity,
    beta: f64,
    state: &SeparableState,
    v: &TangentPair,
) -> Result<f64> {
    let eval = target.eval_tempered(state, beta)?;
    let k = LocalMetric::new(target.metric, state)?.kinetic(v);
    Ok(k - eval.log_target)
}

/// Continue while the velocity still points away from the trajectory start:
/// `⟨v, −W⟩ ≥ 0` with `W` the log map from `current` back to `start`.
/// Numerical failures terminate.
pub fn dynamic_termination(
    start: &SeparableState,
    current: &SeparableState,
    v: &TangentPair,
    metric: MetricKind,
) -> bool {
    let inner = || -> Result<f64> {
        let w1 = spd_log_map(&current.sigma1, &start.sigma1)?;
        let w2 = spd_log_map(&current.sigma2, &start.sigma2)?;
        let w = TangentPair::new(w1, w2).scaled(-1.0);
        Ok(LocalMetric::new(metric, current)?.inner(v, &w))
    };
    matches!(inner(), Ok(x) if x >= 0.0)
}

fn rejected(state: &SeparableState, log_post: f64, eps: f64, steps: usize, delta: f64) -> ChainSample {
    ChainSample {
        state: state.clone(),
        accepted: false,
        delta_energy: delta,
        accept_prob: 0.0,
        epsilon: eps,
        steps,
        log_post,
    }
}

/// One geodesic Lagrangian Monte Carlo transition at inverse temperature
/// `beta`. Numerical failure anywhere in the proposal counts as rejection.
pub fn sglmc_step_tempered<R: Rng + ?Sized>(
    state: &SeparableState,
    target: &TargetDensity,
    beta: f64,
    eps: f64,
    policy: LeapfrogPolicy,
    rng: &mut R,
) -> Result<ChainSample> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size {eps} must be positive")));
    }
    // the current state must be valid; failures past this point only reject
    let eval0 = target.eval_tempered(state, beta)?;
    let metric0 = LocalMetric::new(target.metric, state)?;
    let v0 = metric0.sample_velocity(rng)?;
    let h0 = metric0.kinetic(&v0) - eval0.log_target;
    let log_post0 = eval0.log_post;

    let grad0 = match metric0.riemannian_grad(&eval0.grad1, &eval0.grad2) {
        Ok(g) => g,
        Err(_) => return Ok(rejected(state, log_post0, eps, 0, f64::INFINITY)),
    };
    let mut p = Point { state: state.clone(), v: v0, eval: eval0, grad: grad0 };
    let (max_steps, dynamic) = match policy {
        LeapfrogPolicy::Fixed { steps } => (steps, false),
        LeapfrogPolicy::Dynamic { max_steps } => (max_steps.min(DYNAMIC_MAX_STEPS), true),
    };
    let mut steps = 0;
    while steps < max_steps {
        p = match step(target, beta, p, eps) {
            Ok(next) => next,
            Err(_) => return Ok(rejected(state, log_post0, eps, steps + 1, f64::INFINITY)),
        };
        steps += 1;
        if dynamic && !dynamic_termination(state, &p.state, &p.v, target.metric) {
            break;
        }
    }
    let h1 = match LocalMetric::new(target.metric, &p.state) {
        Ok(m) => m.kinetic(&p.v) - p.eval.log_target,
        Err(_) => return Ok(rejected(state, log_post0, eps, steps, f64::INFINITY)),
    };
    let delta = h1 - h0;
    if !delta.is_finite() {
        return Ok(rejected(state, log_post0, eps, steps, f64::INFINITY));
    }
    let accept_prob = (-delta).exp().min(1.0);
    let accepted = accept_prob >= 1.0 || rng.random::<f64>() < accept_prob;
    Ok(if accepted {
        ChainSample {
            state: p.state,
            accepted,
            delta_energy: delta,
            accept_prob,
            epsilon: eps,
            steps,
            log_post: p.eval.log_post,
        }
    } else {
        ChainSample { accept_prob, ..rejected(state, log_post0, eps, steps, delta) }
    })
}

/// Untempered [`sglmc_step_tempered`].
pub fn sglmc_step<R: Rng + ?Sized>(
    state: &SeparableState,
    target: &TargetDensity,
    eps: f64,
    policy: LeapfrogPolicy,
    rng: &mut R,
) -> Result<ChainSample> {
    sglmc_step_tempered(state, target, 1.0, eps, policy, rng)
}
