use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    accept_log_ratio, gibbs_step, sglmc_step_tempered, tempering_ladder, ChainSample,
    DualAveragingState, LeapfrogPolicy, TargetDensity,
};
use crate::metric::LocalMetric;
use crate::model::{flipflop_mle, normalize_component, SeparableState};
use crate::{Error, Result};

/// RNG stream reserved for swap proposals; chain `k` (counted from the cold
/// chain) uses stream `k`.
pub const SWAP_STREAM: u64 = u64::MAX;

/// Flip-flop settings used for initialization.
const INIT_TOL: f64 = 1e-10;
const INIT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tempering {
    #[default]
    Off,
    On { n_chains: usize, c1: f64 },
}

/// Run settings shared by both samplers (the Gibbs sampler ignores the
/// step-size fields and treats adaptation iterations as burn-in).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_adapt: usize,
    pub n_burn: usize,
    pub n_samples: usize,
    pub leapfrog: LeapfrogPolicy,
    /// Initial step size; `None` picks one by repeated halving/doubling.
    pub epsilon0: Option<f64>,
    pub target_accept: f64,
    pub seed: u64,
    pub tempering: Tempering,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_adapt: 500,
            n_burn: 500,
            n_samples: 2000,
            leapfrog: LeapfrogPolicy::default(),
            epsilon0: None,
            target_accept: 0.8,
            seed: 0,
            tempering: Tempering::Off,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target acceptance {} must lie in (0, 1)",
                self.target_accept
            )));
        }
        if let Some(eps) = self.epsilon0 {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon0 = {eps} must be positive")));
            }
        }
        match self.leapfrog {
            LeapfrogPolicy::Fixed { steps: 0 } | LeapfrogPolicy::Dynamic { max_steps: 0 } => {
                return Err(Error::InvalidParameter("leapfrog step count must be positive".into()))
            }
            _ => {}
        }
        if let Tempering::On { n_chains, c1 } = self.tempering {
            tempering_ladder(c1, n_chains)?;
        }
        Ok(())
    }
}

/// Starting point of a chain.
#[derive(Debug, Clone)]
pub enum Init {
    State(SeparableState),
    /// Flip-flop MLE, falling back to the identity when there is no data.
    FlipFlop,
}

/// Samples plus run metadata.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<ChainSample>,
    /// Step size used after adaptation (0 for Gibbs).
    pub epsilon: f64,
    pub swaps_proposed: usize,
    pub swaps_accepted: usize,
    /// Proposals rejected because of numerical failure.
    pub failures: usize,
}

impl ChainOutput {
    pub fn acceptance_rate(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.accepted).count() as f64 / self.samples.len() as f64
    }
}

/// Chain RNG for stream `stream` of `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn initial_state(target: &TargetDensity, init: &Init) -> Result<SeparableState> {
    let state = match init {
        Init::State(s) => {
            target.data.check_state(s)?;
            s.clone()
        }
        Init::FlipFlop => {
            let (d1, d2) = (target.d1(), target.d2());
            if target.data.n() == 0 {
                SeparableState::identity(d1, d2)
            } else {
                flipflop_mle(&target.data, INIT_TOL, INIT_MAX_ITER)?.state
            }
        }
    };
    if target.metric.is_constrained() {
        normalize_component(&state)
    } else {
        Ok(state)
    }
}

/// Heuristic starting step size: halve or double from 1 until the one-step
/// acceptance probability crosses ½.
pub fn find_reasonable_epsilon<R: Rng + ?Sized>(
    state: &SeparableState,
    target: &TargetDensity,
    rng: &mut R,
) -> Result<f64> {
    let metric = LocalMetric::new(target.metric, state)?;
    let v = metric.sample_velocity(rng)?;
    let h0 = super::hamiltonian(target, 1.0, state, &v)?;
    let log_accept = |eps: f64| -> f64 {
        super::leapfrog(target, 1.0, state, &v, eps, 1)
            .and_then(|(s, w)| super::hamiltonian(target, 1.0, &s, &w))
            .map(|h1| h0 - h1)
            .ok()
            .filter(|x| x.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut eps = 1.0;
    let half = 0.5f64.ln();
    let up = log_accept(eps) > half;
    for _ in 0..60 {
        let next = if up { eps * 2.0 } else { eps * 0.5 };
        let la = log_accept(next);
        if (la > half) != up {
            return Ok(if up { eps } else { next });
        }
        eps = next;
    }
    Ok(eps)
}

struct Replica {
    state: SeparableState,
    log_post: f64,
    beta: f64,
    rng: ChaCha8Rng,
    da: DualAveragingState,
    eps: f64,
}

/// Runs adaptation, burn-in and sampling for the geodesic sampler.
///
/// With tempering, `n_chains` replicas advance in lockstep, one random
/// adjacent pair is proposed for exchange per iteration, and only the cold
/// chain is recorded. Replicas at equal temperature are never exchanged.
pub fn run_chain(config: &SamplerConfig, target: &TargetDensity, init: &Init) -> Result<ChainOutput> {
    config.validate()?;
    let start = initial_state(target, init)?;
    let ladder = match config.tempering {
        Tempering::Off => vec![1.0],
        Tempering::On { n_chains, c1 } => tempering_ladder(c1, n_chains)?,
    };
    let n = ladder.len();
    let mut replicas = Vec::with_capacity(n);
    for (k, &beta) in ladder.iter().enumerate() {
        // cold chain (last on the ladder) is stream 0
        let mut rng = chain_rng(config.seed, (n - 1 - k) as u64);
        let eps0 = match config.epsilon0 {
            Some(e) => e,
            None => find_reasonable_epsilon(&start, target, &mut rng)?,
        };
        let log_post = target.log_posterior(&start)?;
        replicas.push(Replica {
            state: start.clone(),
            log_post,
            beta,
            rng,
            da: DualAveragingState::new(eps0),
            eps: eps0,
        });
    }
    let mut swap_rng = chain_rng(config.seed, SWAP_STREAM);
    let total = config.n_adapt + config.n_burn + config.n_samples;
    let mut samples = Vec::with_capacity(config.n_samples);
    let (mut proposed, mut accepted, mut failures) = (0, 0, 0);

    for it in 0..total {
        let adapting = it < config.n_adapt;
        if it == config.n_adapt {
            for r in replicas.iter_mut() {
                r.eps = r.da.final_epsilon();
            }
        }
        for (k, r) in replicas.iter_mut().enumerate() {
            let s = sglmc_step_tempered(&r.state, target, r.beta, r.eps, config.leapfrog, &mut r.rng)?;
            if s.delta_energy == f64::INFINITY {
                failures += (k == n - 1) as usize;
            }
            if adapting {
                r.eps = r.da.update(s.accept_prob, config.target_accept);
            }
            r.state = s.state.clone();
            r.log_post = s.log_post;
            if k == n - 1 && it >= config.n_adapt + config.n_burn {
                samples.push(s);
            }
        }
        if n > 1 {
            let j = swap_rng.random_range(0..n - 1);
            proposed += 1;
            let (ci, cj) = (replicas[j].beta, replicas[j + 1].beta);
            let (x, y) = (&replicas[j], &replicas[j + 1]);
            let r = target
                .swap_log_ratio((&x.state, x.log_post, ci), (&y.state, y.log_post, cj))
                .unwrap_or(f64::NEG_INFINITY);
            if accept_log_ratio(r, &mut swap_rng) {
                accepted += 1;
                if ci != cj {
                    let (a, b) = replicas.split_at_mut(j + 1);
                    std::mem::swap(&mut a[j].state, &mut b[0].state);
                    std::mem::swap(&mut a[j].log_post, &mut b[0].log_post);
                }
            }
        }
    }
    let epsilon = replicas[n - 1].eps;
    Ok(ChainOutput { samples, epsilon, swaps_proposed: proposed, swaps_accepted: accepted, failures })
}

/// Runs the conjugate Gibbs sampler for `n_adapt + n_burn` warm-up sweeps
/// and `n_samples` recorded sweeps.
pub fn run_gibbs(config: &SamplerConfig, target: &TargetDensity, init: &Init) -> Result<ChainOutput> {
    if !(target.prior1.is_conjugate() && target.prior2.is_conjugate()) {
        return Err(Error::NonConjugatePrior);
    }
    let mut state = match init {
        Init::State(s) => {
            target.data.check_state(s)?;
            s.clone()
        }
        Init::FlipFlop => initial_state(&target.with_metric(crate::MetricKind::Product)?, init)?,
    };
    let mut rng = chain_rng(config.seed, 0);
    let warm = config.n_adapt + config.n_burn;
    let mut samples = Vec::with_capacity(config.n_samples);
    for it in 0..warm + config.n_samples {
        state = gibbs_step(&state, target, &mut rng)?;
        if it >= warm {
            samples.push(ChainSample {
                state: state.clone(),
                accepted: true,
                delta_energy: 0.0,
                accept_prob: 1.0,
                epsilon: 0.0,
                steps: 0,
                log_post: target.log_posterior(&state).unwrap_or(f64::NAN),
            });
        }
    }
    Ok(ChainOutput { samples, epsilon: 0.0, swaps_proposed: 0, swaps_accepted: 0, failures: 0 })
}
