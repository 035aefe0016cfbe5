//! Bayesian inference for separable covariance matrices `Σ = Σ₁ ⊗ Σ₂`.
//!
//! Observations `y = vec(Y)` with `Y` a `d₂ × d₁` matrix are modelled as
//! `y ~ N(0, Σ₁ ⊗ Σ₂)`. The crate provides
//!
//! * Kronecker and (half-)vectorization algebra ([`kron`]),
//! * affine-invariant geometry of a single SPD factor ([`spd`]),
//! * the rearrangement/SVD decomposition of the scatter matrix into a sum of
//!   Kronecker products ([`pvl`]),
//! * the matrix-normal likelihood, priors, simulators and the flip-flop MLE
//!   ([`model`]),
//! * four Riemannian metrics on the product of SPD cones ([`metric`]),
//! * a conjugate Gibbs sampler and a separable geodesic Lagrangian Monte
//!   Carlo sampler with step-size adaptation, dynamic trajectory length and
//!   parallel tempering ([`samplers`]),
//! * chain diagnostics ([`diagnostics`]) and flat-file formats ([`io`]).
//!
//! Every `vec`/reshape in this crate is column-major.

// `!(x > y)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
mod error;
pub mod io;
pub mod kron;
pub mod metric;
pub mod model;
pub mod pvl;
pub mod samplers;
pub mod spd;

pub use error::{Error, Result};
pub use metric::{MetricKind, TangentPair};
pub use model::{Dataset, PriorSpec, SeparableState};
pub use pvl::{PvlTerms, ScatterMatrix};
pub use spd::{SpdMatrix, TangentVector};

/// Dense column-major matrix used throughout the crate.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type DenseVector = nalgebra::DVector<f64>;
