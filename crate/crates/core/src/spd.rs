//! Affine-invariant geometry of a single symmetric positive definite factor.
//!
//! All matrix functions go through a symmetric eigendecomposition and every
//! output is passed through [`symm`] so asymmetry cannot accumulate over long
//! integrations.

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::Dyn;

use crate::kron::{asymmetry, symm, SYMMETRY_TOL};
use crate::{DenseMatrix, DenseVector, Error, Result};

/// Relative eigenvalue floor below which the constructor refuses to jitter.
const JITTER_REL: f64 = 1e-12;

/// A symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DenseMatrix,
}

/// A symmetric matrix, read as a tangent vector at some SPD point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    m: DenseMatrix,
}

/// Eigen-pairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DenseVector,
    /// Orthonormal eigenvectors stored column-wise, matching `values`.
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// `Q · diag(f(λ)) · Qᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[k]);
        }
        symm(&(scaled * self.vectors.transpose()))
    }
}

fn check_finite(m: &DenseMatrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    check_finite(m)?;
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with descending eigenvalues.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEigen> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigFailure)?;
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DenseVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DenseMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure);
    }
    Ok(SymEigen { values, vectors })
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    ///
    /// A matrix whose Cholesky factorization fails but whose smallest
    /// eigenvalue is above `−1e-12·λmax` is shifted by `1e-12·λmax·I`;
    /// anything worse is rejected.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        check_symmetric(&m)?;
        let m = symm(&m);
        if Cholesky::new(m.clone()).is_some() {
            return Ok(Self { m });
        }
        let eig = sym_eig(&m)?;
        let lmax = eig.values[0];
        let lmin = eig.values[eig.values.len() - 1];
        if lmax <= 0.0 || lmin <= -JITTER_REL * lmax {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        let mut shifted = m;
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += JITTER_REL * lmax;
        }
        if Cholesky::new(shifted.clone()).is_none() {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        Ok(Self { m: shifted })
    }

    pub fn identity(d: usize) -> Self {
        Self { m: DenseMatrix::identity(d, d) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_diagonal(&DenseVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.m
    }

    pub fn cholesky(&self) -> Cholesky<f64, Dyn> {
        // invariant: construction guarantees the factorization exists
        Cholesky::new(self.m.clone()).expect("SpdMatrix invariant violated")
    }

    pub fn inverse(&self) -> DenseMatrix {
        symm(&self.cholesky().inverse())
    }

    /// `log |Σ|` via the Cholesky factor.
    pub fn log_det(&self) -> f64 {
        let l = self.cholesky();
        2.0 * l.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    /// `Σ⁻¹ · B`.
    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        self.cholesky().solve(b)
    }

    /// `c · Σ` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {c} must be positive")));
        }
        Ok(Self { m: &self.m * c })
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

impl TangentVector {
    /// Validates symmetry (within `1e-10` relative) and symmetrizes exactly.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(Self { m: symm(&m) })
    }

    /// Symmetric part of an arbitrary square matrix.
    pub fn from_symmetrized(m: &DenseMatrix) -> Self {
        Self { m: symm(m) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: DenseMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.m
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, other: &TangentVector, c: f64) -> Self {
        Self { m: &self.m + &other.m * c }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }
}

/// Eigendecomposition of an SPD matrix.
pub fn spd_eig(sigma: &SpdMatrix) -> Result<SymEigen> {
    sym_eig(sigma.matrix())
}

/// Scalar functions applied through the eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFunction {
    Sqrt,
    InvSqrt,
    Log,
    Exp,
}

impl MatrixFunction {
    fn apply(self, x: f64) -> f64 {
        match self {
            MatrixFunction::Sqrt => x.sqrt(),
            MatrixFunction::InvSqrt => 1.0 / x.sqrt(),
            MatrixFunction::Log => x.ln(),
            MatrixFunction::Exp => x.exp(),
        }
    }
}

/// `f(Σ)` for an SPD argument.
pub fn spd_fn(sigma: &SpdMatrix, f: MatrixFunction) -> Result<DenseMatrix> {
    Ok(spd_eig(sigma)?.map(|x| f.apply(x)))
}

/// Matrix exponential of a symmetric (not necessarily definite) matrix.
pub fn sym_exp(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric(m)?;
    Ok(sym_eig(&symm(m))?.map(f64::exp))
}

fn check_dims(sigma: &SpdMatrix, v: &TangentVector) -> Result<()> {
    if sigma.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point has dimension {} but tangent has {}",
            sigma.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Affine-invariant inner product `tr(Σ⁻¹S₁Σ⁻¹S₂)`.
pub fn affine_inner(sigma: &SpdMatrix, s1: &TangentVector, s2: &TangentVector) -> Result<f64> {
    check_dims(sigma, s1)?;
    check_dims(sigma, s2)?;
    let chol = sigma.cholesky();
    let x1 = chol.solve(s1.matrix());
    let x2 = chol.solve(s2.matrix());
    Ok(x1.component_mul(&x2.transpose()).sum())
}

/// Square root and inverse square root from a single eigendecomposition.
pub fn sqrt_pair(sigma: &SpdMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let eig = spd_eig(sigma)?;
    Ok((eig.map(f64::sqrt), eig.map(|x| 1.0 / x.sqrt())))
}

/// Position and velocity after following the geodesic from `(Σ₀, V₀)` for time `t`.
///
/// With `S = Σ₀^{1/2}` and `W = S⁻¹V₀S⁻¹ = QΛQᵀ`:
/// `Σ(t) = (SQ) e^{tΛ} (SQ)ᵀ` and `V(t) = (SQ) Λe^{tΛ} (SQ)ᵀ`.
pub fn geodesic_flow(
    sigma0: &SpdMatrix,
    v0: &TangentVector,
    t: f64,
) -> Result<(SpdMatrix, TangentVector)> {
    check_dims(sigma0, v0)?;
    let (s, s_inv) = sqrt_pair(sigma0)?;
    let w = symm(&(&s_inv * v0.matrix() * &s_inv));
    check_finite(&w)?;
    let eig = sym_eig(&w)?;
    let sq = &s * &eig.vectors;
    let d = sigma0.dim();
    let mut pos = DenseMatrix::zeros(d, d);
    let mut vel = DenseMatrix::zeros(d, d);
    for k in 0..d {
        let lam = eig.values[k];
        let e = (t * lam).exp();
        let col = sq.column(k);
        pos += col * col.transpose() * e;
        vel += col * col.transpose() * (lam * e);
    }
    check_finite(&pos)?;
    check_finite(&vel)?;
    let sigma_t = SpdMatrix::new(symm(&pos))?;
    Ok((sigma_t, TangentVector { m: symm(&vel) }))
}

/// `Σ(t) = Σ₀^{1/2} exp(t Σ₀^{-1/2} V₀ Σ₀^{-1/2}) Σ₀^{1/2}`.
pub fn geodesic_step(sigma0: &SpdMatrix, v0: &TangentVector, t: f64) -> Result<SpdMatrix> {
    geodesic_flow(sigma0, v0, t).map(|(s, _)| s)
}

/// `V(t) = dΣ(t)/dt` along [`geodesic_step`].
pub fn velocity_flow(sigma0: &SpdMatrix, v0: &TangentVector, t: f64) -> Result<TangentVector> {
    geodesic_flow(sigma0, v0, t).map(|(_, v)| v)
}

/// Riemannian logarithm: the tangent at `Σ₀` whose unit-time geodesic reaches `Σ₁`.
pub fn spd_log_map(sigma0: &SpdMatrix, sigma1: &SpdMatrix) -> Result<TangentVector> {
    if sigma0.dim() != sigma1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "log map between dimensions {} and {}",
            sigma0.dim(),
            sigma1.dim()
        )));
    }
    if sigma0 == sigma1 {
        return Ok(TangentVector::zeros(sigma0.dim()));
    }
    let (s, s_inv) = sqrt_pair(sigma0)?;
    let inner = symm(&(&s_inv * sigma1.matrix() * &s_inv));
    let eig = sym_eig(&inner)?;
    if eig.values.iter().any(|&x| x <= 0.0) {
        return Err(Error::EigFailure);
    }
    let log_inner = eig.map(f64::ln);
    Ok(TangentVector { m: symm(&(&s * log_inner * &s)) })
}
