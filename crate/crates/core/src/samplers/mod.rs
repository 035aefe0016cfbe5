//! Gibbs and geodesic Lagrangian Monte Carlo samplers.

mod adapt;
mod chain;
mod gibbs;
mod sglmc;
mod target;
mod tempering;

pub use adapt::{dual_averaging_update, DualAveragingState};
pub use chain::{
    chain_rng, find_reasonable_epsilon, run_chain, run_gibbs, ChainOutput, Init, SamplerConfig,
    Tempering, SWAP_STREAM,
};
pub use gibbs::gibbs_step;
pub use sglmc::{
    dynamic_termination, hamiltonian, leapfrog, sglmc_step, sglmc_step_tempered, ChainSample,
    LeapfrogPolicy, DYNAMIC_MAX_STEPS,
};
pub use target::{
    scale_orbit, target_eval, ScaleOrbit, SliceDensity, TargetDensity, TargetEval, HAUSDORFF_WEIGHT,
};
pub use tempering::{accept_log_ratio, swap_accept, swap_log_ratio, tempering_ladder};
