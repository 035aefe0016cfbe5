//! Riemannian metrics on `𝒫(d₁) × 𝒫(d₂)`.
//!
//! All four kinds are block-diagonal sums of affine-invariant metrics with
//! block weights `(w₁, w₂)`; the regularized kind adds the cross term
//! `2α tr(Σ₁⁻¹V₁) tr(Σ₂⁻¹V₂)` to the quadratic form. Constrained kinds live on
//! the submanifold `|Σ₂| = 1`, whose tangent space is `tr(Σ₂⁻¹V₂) = 0`.
//!
//! Dense tensors are expressed in stacked half-vectorized coordinates
//! `(vech V₁, vech V₂)` as `Ĝ = D̄ᵀ G D̄`.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kron::{symm, unvech, vech, vech_index, vech_len};
use crate::model::{standard_normal_matrix, SeparableState};
use crate::pvl::trace_product;
use crate::spd::{sqrt_pair, SpdMatrix, TangentVector};
use crate::{DenseMatrix, DenseVector, Error, Result};

/// Largest stacked-vech dimension for which dense tensors are built.
pub const MAX_TENSOR_DIM: usize = 2000;

/// Default weight for [`MetricKind::Weighted`].
pub const DEFAULT_OMEGA: f64 = 0.5;

/// Metric variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricKind {
    /// Pullback metric plus regularization, positive definite for `α < 1`.
    Regularized { alpha: f64 },
    /// Pullback metric restricted to `|Σ₂| = 1`.
    Orthogonalized,
    /// Blend of pullback and product weights on `|Σ₂| = 1`.
    Weighted {
        #[serde(default = "default_omega")]
        omega: f64,
    },
    /// Unweighted product of affine-invariant metrics.
    Product,
}

fn default_omega() -> f64 {
    DEFAULT_OMEGA
}

impl MetricKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricKind::Regularized { alpha } if !(0.0..1.0).contains(&alpha) => Err(
                Error::InvalidParameter(format!("regularization alpha = {alpha} must lie in [0, 1)")),
            ),
            MetricKind::Weighted { omega } if !(omega > 0.0 && omega < 1.0) => Err(
                Error::InvalidParameter(format!("weight omega = {omega} must lie in (0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    /// Whether the `|Σ₂| = 1` constraint is active.
    pub fn is_constrained(&self) -> bool {
        matches!(self, MetricKind::Orthogonalized | MetricKind::Weighted { .. })
    }

    /// Block weights `(w₁, w₂)`: the `Σ₁` block carries `d₂` and vice versa.
    pub fn weights(&self, d1: usize, d2: usize) -> (f64, f64) {
        let (d1, d2) = (d1 as f64, d2 as f64);
        match *self {
            MetricKind::Regularized { .. } | MetricKind::Orthogonalized => (d2, d1),
            MetricKind::Weighted { omega } => {
                (omega * d2 + 1.0 - omega, omega * d1 + 1.0 - omega)
            }
            MetricKind::Product => (1.0, 1.0),
        }
    }

    /// Cross-term coefficient `α` (zero except for the regularized kind).
    pub fn cross(&self) -> f64 {
        match *self {
            MetricKind::Regularized { alpha } => alpha,
            _ => 0.0,
        }
    }

    /// Short lowercase label used in file names and reports.
    pub fn label(&self) -> &'static str {
        match self {
            MetricKind::Regularized { .. } => "regularized",
            MetricKind::Orthogonalized => "orthogonalized",
            MetricKind::Weighted { .. } => "weighted",
            MetricKind::Product => "product",
        }
    }
}

/// A velocity `(V₁, V₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    pub v1: TangentVector,
    pub v2: TangentVector,
}

impl TangentPair {
    pub fn new(v1: TangentVector, v2: TangentVector) -> Self {
        Self { v1, v2 }
    }

    pub fn zeros(d1: usize, d2: usize) -> Self {
        Self { v1: TangentVector::zeros(d1), v2: TangentVector::zeros(d2) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { v1: self.v1.scaled(c), v2: self.v2.scaled(c) }
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, other: &TangentPair, c: f64) -> Self {
        Self { v1: self.v1.add_scaled(&other.v1, c), v2: self.v2.add_scaled(&other.v2, c) }
    }

    /// Stacked `(vech V₁, vech V₂)`.
    pub fn to_vech(&self) -> DenseVector {
        let a = vech_of_symmetric(self.v1.matrix());
        let b = vech_of_symmetric(self.v2.matrix());
        let mut out = DenseVector::zeros(a.len() + b.len());
        out.rows_mut(0, a.len()).copy_from(&a);
        out.rows_mut(a.len(), b.len()).copy_from(&b);
        out
    }

    pub fn from_vech(x: &DenseVector, d1: usize, d2: usize) -> Result<Self> {
        let (m1, m2) = (vech_len(d1), vech_len(d2));
        if x.len() != m1 + m2 {
            return Err(Error::DimensionMismatch(format!(
                "stacked vech of length {} does not match ({d1}, {d2})",
                x.len()
            )));
        }
        let v1 = unvech(&x.rows(0, m1).into_owned())?;
        let v2 = unvech(&x.rows(m1, m2).into_owned())?;
        Ok(Self { v1: TangentVector::from_symmetrized(&v1), v2: TangentVector::from_symmetrized(&v2) })
    }
}

fn vech_of_symmetric(m: &DenseMatrix) -> DenseVector {
    // inputs are exactly symmetric by construction of TangentVector
    vech(m).unwrap_or_else(|_| vech(&symm(m)).expect("symmetrized"))
}

fn check_state(state: &SeparableState, v: &TangentPair) -> Result<()> {
    if v.v1.dim() != state.d1() || v.v2.dim() != state.d2() {
        return Err(Error::DimensionMismatch(format!(
            "velocity is ({}, {}) but state is ({}, {})",
            v.v1.dim(),
            v.v2.dim(),
            state.d1(),
            state.d2()
        )));
    }
    Ok(())
}

/// `V₂ − (tr(Σ₂⁻¹V₂)/d₂) Σ₂`: removes the scale direction so that
/// `tr(Σ₂⁻¹V₂) = 0`.
pub fn project_tangent(sigma2: &SpdMatrix, v2: &TangentVector) -> TangentVector {
    let t = sigma2.solve(v2.matrix()).trace() / sigma2.dim() as f64;
    TangentVector::from_symmetrized(&(v2.matrix() - sigma2.matrix() * t))
}

/// Per-state quantities shared by the metric operations.
pub struct LocalMetric<'a> {
    kind: MetricKind,
    state: &'a SeparableState,
    chol1: Cholesky<f64, Dyn>,
    chol2: Cholesky<f64, Dyn>,
    w1: f64,
    w2: f64,
    dense: Option<Cholesky<f64, Dyn>>,
}

impl<'a> LocalMetric<'a> {
    /// Precomputes inverses, and for the regularized kind the factorized
    /// dense tensor.
    pub fn new(kind: MetricKind, state: &'a SeparableState) -> Result<Self> {
        let (w1, w2) = kind.weights(state.d1(), state.d2());
        let dense = if let MetricKind::Regularized { .. } = kind {
            let g = tensor_from_inverses(
                kind,
                &state.sigma1.inverse(),
                &state.sigma2.inverse(),
                w1,
                w2,
            )?;
            Some(Cholesky::new(g).ok_or_else(|| {
                Error::CholeskyFailure("regularized metric tensor is not positive definite".into())
            })?)
        } else {
            None
        };
        let (chol1, chol2) = (state.sigma1.cholesky(), state.sigma2.cholesky());
        Ok(Self { kind, state, chol1, chol2, w1, w2, dense })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Metric bilinear form `⟨u, v⟩`.
    /// Evaluated as `tr(L⁻¹UL⁻ᵀ · L⁻¹VL⁻ᵀ)` with `Σ = LLᵀ`, which stays
    /// non-negative on the diagonal however ill-conditioned `Σ` is.
    pub fn inner(&self, u: &TangentPair, v: &TangentPair) -> f64 {
        let a1 = whiten(&self.chol1, u.v1.matrix());
        let b1 = whiten(&self.chol1, v.v1.matrix());
        let a2 = whiten(&self.chol2, u.v2.matrix());
        let b2 = whiten(&self.chol2, v.v2.matrix());
        let mut out = self.w1 * trace_product(&a1, &b1) + self.w2 * trace_product(&a2, &b2);
        let alpha = self.kind.cross();
        if alpha != 0.0 {
            out += alpha * (a1.trace() * b2.trace() + b1.trace() * a2.trace());
        }
        out
    }

    /// `½ ⟨v, v⟩`.
    pub fn kinetic(&self, v: &TangentPair) -> f64 {
        0.5 * self.inner(v, v)
    }

    /// Projects `V₂` when the constraint is active; identity otherwise.
    pub fn constrain(&self, v: TangentPair) -> TangentPair {
        if self.kind.is_constrained() {
            let v2 = project_tangent(&self.state.sigma2, &v.v2);
            TangentPair { v1: v.v1, v2 }
        } else {
            v
        }
    }

    /// Draws `v` with density proportional to `exp(−½⟨v, v⟩)` on the
    /// (possibly constrained) tangent space.
    pub fn sample_velocity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TangentPair> {
        let (d1, d2) = (self.state.d1(), self.state.d2());
        if let Some(chol) = &self.dense {
            let m = vech_len(d1) + vech_len(d2);
            let z = DenseVector::from_iterator(
                m,
                standard_normal_matrix(m, 1, rng).iter().cloned(),
            );
            // Ĝ = LLᵀ, x = L⁻ᵀ z has covariance Ĝ⁻¹
            let x = chol
                .l_dirty()
                .tr_solve_lower_triangular(&z)
                .ok_or_else(|| Error::CholeskyFailure("singular factor".into()))?;
            return TangentPair::from_vech(&x, d1, d2);
        }
        let draw = |sigma: &SpdMatrix, w: f64, rng: &mut R| -> Result<TangentVector> {
            let (r, _) = sqrt_pair(sigma)?;
            let a = standard_normal_matrix(sigma.dim(), sigma.dim(), rng);
            Ok(TangentVector::from_symmetrized(&(&r * a * &r / w.sqrt())))
        };
        let v1 = draw(&self.state.sigma1, self.w1, rng)?;
        let v2 = draw(&self.state.sigma2, self.w2, rng)?;
        Ok(self.constrain(TangentPair { v1, v2 }))
    }

    /// Riemannian gradient of a function with Euclidean gradient `(E₁, E₂)`.
    pub fn riemannian_grad(&self, e1: &DenseMatrix, e2: &DenseMatrix) -> Result<TangentPair> {
        let (d1, d2) = (self.state.d1(), self.state.d2());
        if e1.shape() != (d1, d1) || e2.shape() != (d2, d2) {
            return Err(Error::DimensionMismatch("Euclidean gradient shape".into()));
        }
        if let Some(chol) = &self.dense {
            let rhs = vech_dual(&symm(e1), &symm(e2));
            let x = chol.solve(&rhs);
            return TangentPair::from_vech(&x, d1, d2);
        }
        let s1 = self.state.sigma1.matrix();
        let s2 = self.state.sigma2.matrix();
        let v1 = TangentVector::from_symmetrized(&(s1 * symm(e1) * s1 / self.w1));
        let v2 = TangentVector::from_symmetrized(&(s2 * symm(e2) * s2 / self.w2));
        Ok(self.constrain(TangentPair { v1, v2 }))
    }
}

/// `L⁻¹ V L⁻ᵀ`.
fn whiten(chol: &Cholesky<f64, Dyn>, v: &DenseMatrix) -> DenseMatrix {
    let l = chol.l_dirty();
    let x = l.solve_lower_triangular(v).unwrap_or_else(|| v.map(|_| f64::NAN));
    let y = l.solve_lower_triangular(&x.transpose()).unwrap_or_else(|| v.map(|_| f64::NAN));
    symm(&y)
}

/// `D̄ᵀ (vec E₁, vec E₂)`: the Euclidean gradient in stacked vech coordinates,
/// with diagonal entries `Eᵢᵢ` and off-diagonal entries `2Eᵢⱼ`.
pub fn vech_dual(e1: &DenseMatrix, e2: &DenseMatrix) -> DenseVector {
    let part = |e: &DenseMatrix| {
        let d = e.nrows();
        let mut out = DenseVector::zeros(vech_len(d));
        for j in 0..d {
            for i in j..d {
                out[vech_index(d, i, j)] = if i == j { e[(i, i)] } else { e[(i, j)] + e[(j, i)] };
            }
        }
        out
    };
    let (a, b) = (part(e1), part(e2));
    let mut out = DenseVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(&a);
    out.rows_mut(a.len(), b.len()).copy_from(&b);
    out
}

/// Lower-triangle index pairs `(i, j)`, `i ≥ j`, in vech order.
fn vech_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(vech_len(d));
    for j in 0..d {
        for i in j..d {
            out.push((i, j));
        }
    }
    out
}

/// `w · Dᵀ (P ⊗ P) D` computed entrywise.
fn vech_congruence(p: &DenseMatrix, w: f64) -> DenseMatrix {
    let d = p.nrows();
    let pairs = vech_pairs(d);
    let m = pairs.len();
    let mut g = DenseMatrix::zeros(m, m);
    let positions = |(i, j): (usize, usize)| -> Vec<(usize, usize)> {
        if i == j {
            vec![(i, j)]
        } else {
            vec![(i, j), (j, i)]
        }
    };
    for (a, &pa) in pairs.iter().enumerate() {
        let xs = positions(pa);
        for (b, &pb) in pairs.iter().enumerate().skip(a) {
            let mut s = 0.0;
            for &(rx, cx) in &xs {
                for &(ry, cy) in &positions(pb) {
                    // (P⊗P)[c·d + r, c'·d + r'] = P[c, c'] · P[r, r']
                    s += p[(cx, cy)] * p[(rx, ry)];
                }
            }
            g[(a, b)] = w * s;
            g[(b, a)] = w * s;
        }
    }
    g
}

fn tensor_from_inverses(
    kind: MetricKind,
    inv1: &DenseMatrix,
    inv2: &DenseMatrix,
    w1: f64,
    w2: f64,
) -> Result<DenseMatrix> {
    let (d1, d2) = (inv1.nrows(), inv2.nrows());
    let (m1, m2) = (vech_len(d1), vech_len(d2));
    if m1 + m2 > MAX_TENSOR_DIM {
        return Err(Error::MetricTooLarge { size: m1 + m2, cap: MAX_TENSOR_DIM });
    }
    let mut g = DenseMatrix::zeros(m1 + m2, m1 + m2);
    g.view_mut((0, 0), (m1, m1)).copy_from(&vech_congruence(inv1, w1));
    g.view_mut((m1, m1), (m2, m2)).copy_from(&vech_congruence(inv2, w2));
    let alpha = kind.cross();
    if alpha != 0.0 {
        let dual = vech_dual(inv1, inv2);
        let a = dual.rows(0, m1);
        let b = dual.rows(m1, m2);
        let cross = a * b.transpose() * alpha;
        g.view_mut((0, m1), (m1, m2)).copy_from(&cross);
        g.view_mut((m1, 0), (m2, m1)).copy_from(&cross.transpose());
    }
    Ok(g)
}

/// Dense tensor `Ĝ` over stacked vech coordinates.
///
/// The regularized parameter is not range-checked here, so `α = 1` yields the
/// singular pullback tensor.
pub fn build_metric_tensor(kind: MetricKind, state: &SeparableState) -> Result<DenseMatrix> {
    let (w1, w2) = kind.weights(state.d1(), state.d2());
    tensor_from_inverses(kind, &state.sigma1.inverse(), &state.sigma2.inverse(), w1, w2)
}

/// Metric bilinear form.
pub fn metric_inner(
    kind: MetricKind,
    state: &SeparableState,
    u: &TangentPair,
    v: &TangentPair,
) -> Result<f64> {
    check_state(state, u)?;
    check_state(state, v)?;
    Ok(LocalMetric::new(kind, state)?.inner(u, v))
}

/// `½ ⟨v, v⟩`.
pub fn kinetic_energy(kind: MetricKind, state: &SeparableState, v: &TangentPair) -> Result<f64> {
    metric_inner(kind, state, v, v).map(|x| 0.5 * x)
}

pub fn sample_velocity<R: Rng + ?Sized>(
    kind: MetricKind,
    state: &SeparableState,
    rng: &mut R,
) -> Result<TangentPair> {
    LocalMetric::new(kind, state)?.sample_velocity(rng)
}

pub fn riemannian_grad(
    kind: MetricKind,
    state: &SeparableState,
    euclid: (&DenseMatrix, &DenseMatrix),
) -> Result<TangentPair> {
    LocalMetric::new(kind, state)?.riemannian_grad(euclid.0, euclid.1)
}

/// `log |Ĝ|` up to a state-independent constant:
/// `−(d₁+1) log|Σ₁| − (d₂+1) log|Σ₂|`, dropping the `Σ₂` part for
/// constrained kinds.
pub fn metric_logdet(kind: MetricKind, state: &SeparableState) -> f64 {
    let (d1, d2) = (state.d1() as f64, state.d2() as f64);
    let mut out = -(d1 + 1.0) * state.sigma1.log_det();
    if !kind.is_constrained() {
        out -= (d2 + 1.0) * state.sigma2.log_det();
    }
    out
}

/// Euclidean gradient of [`metric_logdet`].
pub fn metric_grad_logdet(kind: MetricKind, state: &SeparableState) -> (DenseMatrix, DenseMatrix) {
    let (d1, d2) = (state.d1(), state.d2());
    let g1 = state.sigma1.inverse() * (-(d1 as f64 + 1.0));
    let g2 = if kind.is_constrained() {
        DenseMatrix::zeros(d2, d2)
    } else {
        state.sigma2.inverse() * (-(d2 as f64 + 1.0))
    };
    (g1, g2)
}
