//! The matrix-normal model: state, data, likelihood, priors, simulators and
//! the flip-flop MLE.

mod likelihood;
mod mle;
mod prior;
mod random;

pub use likelihood::{nll, nll_and_grad, nll_grad};
pub use mle::{flipflop_mle, normalize_component, FlipFlopResult};
pub use prior::{
    eigen_projectors, iw_logpdf_grad, reference_logpdf_grad, siw_logpdf_grad,
    vandermonde_projectors, PriorKind, PriorSpec, EIGEN_GAP_REL,
};
pub use random::{
    generate_experiment, sample_inverse_wishart, sample_matrix_normal, sample_matrix_normal_observations,
    standard_normal_matrix,
};

use crate::kron::kron_capped;
use crate::pvl::{pvl_decompose, scatter, PvlTerms, ScatterMatrix, DEFAULT_PVL_TOL};
use crate::spd::SpdMatrix;
use crate::{DenseMatrix, DenseVector, Error, Result};

/// The pair `(Σ₁, Σ₂)`: the sampler position.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableState {
    pub sigma1: SpdMatrix,
    pub sigma2: SpdMatrix,
}

impl SeparableState {
    pub fn new(sigma1: SpdMatrix, sigma2: SpdMatrix) -> Self {
        Self { sigma1, sigma2 }
    }

    pub fn identity(d1: usize, d2: usize) -> Self {
        Self { sigma1: SpdMatrix::identity(d1), sigma2: SpdMatrix::identity(d2) }
    }

    pub fn d1(&self) -> usize {
        self.sigma1.dim()
    }

    pub fn d2(&self) -> usize {
        self.sigma2.dim()
    }

    /// Dense `Σ₁ ⊗ Σ₂`, subject to the materialization cap.
    pub fn kron_dense(&self, cap: usize) -> Result<DenseMatrix> {
        kron_capped(self.sigma1.matrix(), self.sigma2.matrix(), cap)
    }
}

/// Observations summarized by their Kronecker decomposition.
///
/// Each observation is `y = vec(Y)` with `Y` a `d₂ × d₁` matrix
/// (column-major), so `cov(y) = Σ₁ ⊗ Σ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d1: usize,
    d2: usize,
    n: usize,
    pvl: PvlTerms,
    scatter: Option<ScatterMatrix>,
}

impl Dataset {
    pub fn from_observations(ys: &[DenseVector], d1: usize, d2: usize) -> Result<Self> {
        Self::from_scatter(scatter(ys)?, d1, d2)
    }

    pub fn from_scatter(s: ScatterMatrix, d1: usize, d2: usize) -> Result<Self> {
        Self::from_scatter_with_tol(s, d1, d2, DEFAULT_PVL_TOL)
    }

    pub fn from_scatter_with_tol(s: ScatterMatrix, d1: usize, d2: usize, tol: f64) -> Result<Self> {
        let pvl = pvl_decompose(&s, d1, d2, tol)?;
        Ok(Self { d1, d2, n: s.n(), pvl, scatter: Some(s) })
    }

    /// Data given only through its decomposition.
    pub fn from_pvl(pvl: PvlTerms, n: usize) -> Self {
        Self { d1: pvl.d1(), d2: pvl.d2(), n, pvl, scatter: None }
    }

    /// No observations; the posterior equals the prior.
    pub fn empty(d1: usize, d2: usize) -> Self {
        Self::from_pvl(PvlTerms::empty(d1, d2), 0)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pvl(&self) -> &PvlTerms {
        &self.pvl
    }

    pub fn scatter(&self) -> Option<&ScatterMatrix> {
        self.scatter.as_ref()
    }

    pub(crate) fn check_state(&self, state: &SeparableState) -> Result<()> {
        if state.d1() != self.d1 || state.d2() != self.d2 {
            return Err(Error::DimensionMismatch(format!(
                "state is ({}, {}) but data is ({}, {})",
                state.d1(),
                state.d2(),
                self.d1,
                self.d2
            )));
        }
        Ok(())
    }
}
