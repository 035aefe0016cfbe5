//! Rearrangement/SVD decomposition of a scatter matrix into a sum of
//! Kronecker products `S = Σₖ Aₖ ⊗ Bₖ`.
//!
//! Everything downstream (likelihood, gradients, Gibbs conditionals, the
//! flip-flop MLE) touches the data only through these terms.

use crate::kron::{asymmetry, kron, symm, SYMMETRY_TOL};
use crate::spd::sym_eig;
use crate::{DenseMatrix, DenseVector, Error, Result};

/// Default relative singular-value cutoff.
pub const DEFAULT_PVL_TOL: f64 = 1e-12;

/// Largest `d₁·d₂` for which the decomposition is verified densely on construction.
const RECONSTRUCTION_CHECK_CAP: usize = 64;

/// `Σᵢ yᵢyᵢᵀ` together with the observation count.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    s: DenseMatrix,
    n: usize,
}

impl ScatterMatrix {
    /// Wraps a precomputed scatter matrix after checking symmetry and
    /// positive semidefiniteness (eigenvalues above `−1e-10·λmax`).
    pub fn from_matrix(s: DenseMatrix, n: usize) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "scatter must be square and nonempty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = asymmetry(&s);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let s = symm(&s);
        let eig = sym_eig(&s)?;
        let lmax = eig.values[0].max(0.0);
        let lmin = eig.values[eig.values.len() - 1];
        if lmin < -1e-10 * lmax {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        Ok(Self { s, n })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

/// Accumulates `Σᵢ yᵢyᵢᵀ`.
pub fn scatter(ys: &[DenseVector]) -> Result<ScatterMatrix> {
    let first = ys.first().ok_or(Error::EmptyData)?;
    let d = first.len();
    if d == 0 {
        return Err(Error::EmptyData);
    }
    let mut s = DenseMatrix::zeros(d, d);
    for (i, y) in ys.iter().enumerate() {
        if y.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "observation {i} has length {} but expected {d}",
                y.len()
            )));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        s.ger(1.0, y, y, 1.0);
    }
    Ok(ScatterMatrix { s: symm(&s), n: ys.len() })
}

fn check_factor_dims(d: usize, d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 || d1 * d2 != d {
        return Err(Error::DimensionMismatch(format!(
            "matrix of size {d} does not factor as {d1}x{d2}"
        )));
    }
    Ok(())
}

/// Rearranges a `d₁d₂ × d₁d₂` matrix into `d₁² × d₂²` so that
/// `A ⊗ B ↦ vec(A)·vec(B)ᵀ`.
///
/// The matrix is read as a `d₁ × d₁` grid of `d₂ × d₂` blocks `S_ij`; row
/// `j·d₁ + i` (0-based) of the output is `vec(S_ij)ᵀ`.
pub fn rearrange(s: &DenseMatrix, d1: usize, d2: usize) -> Result<DenseMatrix> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch("rearrange needs a square matrix".into()));
    }
    check_factor_dims(s.nrows(), d1, d2)?;
    let mut r = DenseMatrix::zeros(d1 * d1, d2 * d2);
    for j in 0..d1 {
        for i in 0..d1 {
            let row = j * d1 + i;
            for q in 0..d2 {
                for p in 0..d2 {
                    r[(row, q * d2 + p)] = s[(i * d2 + p, j * d2 + q)];
                }
            }
        }
    }
    Ok(r)
}

/// A sum of Kronecker products `Σₖ Aₖ ⊗ Bₖ`.
///
/// A symmetric scatter matrix splits into pairs with both factors symmetric
/// and pairs with both factors antisymmetric. Only the symmetric pairs enter
/// traces against symmetric matrices, so they are the sufficient statistic;
/// the antisymmetric pairs are kept solely to make [`PvlTerms::reconstruct`]
/// exact.
#[derive(Debug, Clone, PartialEq)]
pub struct PvlTerms {
    d1: usize,
    d2: usize,
    terms: Vec<(DenseMatrix, DenseMatrix)>,
    antisymmetric: Vec<(DenseMatrix, DenseMatrix)>,
}

impl PvlTerms {
    /// The empty decomposition (zero scatter), used for prior-only targets.
    pub fn empty(d1: usize, d2: usize) -> Self {
        Self { d1, d2, terms: Vec::new(), antisymmetric: Vec::new() }
    }

    /// Builds symmetric terms directly; each `Aₖ` must be `d₁ × d₁` and each
    /// `Bₖ` `d₂ × d₂`. Inputs are symmetrized.
    pub fn from_terms(d1: usize, d2: usize, terms: Vec<(DenseMatrix, DenseMatrix)>) -> Result<Self> {
        for (a, b) in &terms {
            if a.shape() != (d1, d1) || b.shape() != (d2, d2) {
                return Err(Error::DimensionMismatch(format!(
                    "term shapes {:?} and {:?} do not match ({d1}, {d2})",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        let terms = terms.into_iter().map(|(a, b)| (symm(&a), symm(&b))).collect();
        Ok(Self { d1, d2, terms, antisymmetric: Vec::new() })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Number of symmetric terms `r`.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// The symmetric terms.
    pub fn terms(&self) -> &[(DenseMatrix, DenseMatrix)] {
        &self.terms
    }

    /// The antisymmetric remainder.
    pub fn antisymmetric_terms(&self) -> &[(DenseMatrix, DenseMatrix)] {
        &self.antisymmetric
    }

    /// Dense `Σₖ Aₖ ⊗ Bₖ` over all terms. Materializes the full
    /// `d₁d₂ × d₁d₂` matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let d = self.d1 * self.d2;
        self.terms
            .iter()
            .chain(&self.antisymmetric)
            .fold(DenseMatrix::zeros(d, d), |acc, (a, b)| acc + kron(a, b))
    }

    /// `Σₖ tr(C Bₖ) Aₖ` for symmetric `C`, equal to `Σᵢ Mᵢᵀ C Mᵢ` for the
    /// `d₂ × d₁` reshapes `Mᵢ` of the observations.
    pub fn contract_b(&self, c: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.d1, self.d1);
        for (a, b) in &self.terms {
            out += a * trace_product(c, b);
        }
        symm(&out)
    }

    /// `Σₖ tr(C Aₖ) Bₖ` for symmetric `C`, equal to `Σᵢ Mᵢ C Mᵢᵀ`.
    pub fn contract_a(&self, c: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.d2, self.d2);
        for (a, b) in &self.terms {
            out += b * trace_product(c, a);
        }
        symm(&out)
    }

    /// `Σₖ tr(C₁Aₖ)·tr(C₂Bₖ)`; with `Cᵢ = Σᵢ⁻¹` this is `tr((Σ₁⊗Σ₂)⁻¹ S)`.
    pub fn trace_pair(&self, c1: &DenseMatrix, c2: &DenseMatrix) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| trace_product(c1, a) * trace_product(c2, b))
            .sum()
    }
}

/// `tr(X·Y)` without forming the product.
pub fn trace_product(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.component_mul(&y.transpose()).sum()
}

/// Symmetric part of the rearrangement: rows and columns projected onto
/// vectorized symmetric matrices.
fn symmetric_part(r: &DenseMatrix, d1: usize, d2: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r.nrows(), r.ncols(), |row, col| {
        let (i, j) = (row % d1, row / d1);
        let (p, q) = (col % d2, col / d2);
        let (rt, ct) = (i * d1 + j, p * d2 + q);
        0.25 * (r[(row, col)] + r[(rt, col)] + r[(row, ct)] + r[(rt, ct)])
    })
}

/// Thin SVD `r = U·diag(σ)·Vᵀ`.
struct Svd {
    u: DenseMatrix,
    sv: DenseVector,
    v: DenseMatrix,
}

impl Svd {
    fn from_nalgebra(r: &DenseMatrix, eps: f64) -> Option<Self> {
        let svd = r.clone().try_svd(true, true, eps, 0)?;
        Some(Svd { u: svd.u?, sv: svd.singular_values, v: svd.v_t?.transpose() })
    }

    fn transposed(self) -> Self {
        Svd { u: self.v, sv: self.sv, v: self.u }
    }

    /// From the eigenpairs of `[0 r; rᵀ 0]`: each `σ > 0` has eigenvector
    /// `(u; v)/√2`.
    fn jordan_wielandt(r: &DenseMatrix) -> Option<Self> {
        let (m, n) = r.shape();
        let mut h = DenseMatrix::zeros(m + n, m + n);
        h.view_mut((0, m), (m, n)).copy_from(r);
        h.view_mut((m, 0), (n, m)).copy_from(&r.transpose());
        let eig = sym_eig(&h).ok()?;
        let k = m.min(n);
        let s2 = std::f64::consts::SQRT_2;
        Some(Svd {
            u: eig.vectors.view((0, 0), (m, k)) * s2,
            sv: eig.values.rows(0, k).map(|v| v.max(0.0)),
            v: eig.vectors.view((m, 0), (n, k)) * s2,
        })
    }

    fn error(&self, r: &DenseMatrix) -> f64 {
        (&self.u * DenseMatrix::from_diagonal(&self.sv) * self.v.transpose() - r).norm()
    }
}

/// nalgebra's bidiagonal QR sometimes converges to an inaccurate
/// factorization on strongly rank-deficient input (the antisymmetric part
/// always is), depending on the threshold and on orientation. Candidates are
/// tried in order and checked by recomposition.
fn checked_svd(r: &DenseMatrix) -> Result<Svd> {
    let tol = 1e-12 * r.norm();
    let candidates: [&dyn Fn() -> Option<Svd>; 5] = [
        &|| Svd::from_nalgebra(r, 5.0 * f64::EPSILON),
        &|| Svd::from_nalgebra(&r.transpose(), 5.0 * f64::EPSILON).map(Svd::transposed),
        &|| Svd::from_nalgebra(r, 1e-14),
        &|| Svd::from_nalgebra(&r.transpose(), 1e-14).map(Svd::transposed),
        &|| Svd::jordan_wielandt(r),
    ];
    let mut best: Option<(f64, Svd)> = None;
    for candidate in candidates {
        let Some(svd) = candidate() else { continue };
        let err = svd.error(r);
        if err <= tol {
            return Ok(svd);
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, svd));
        }
    }
    match best {
        Some((err, svd)) if err <= 1e3 * tol => Ok(svd),
        _ => Err(Error::SvdFailure),
    }
}

/// Rank-one terms `σₖ mat(uₖ) ⊗ mat(vₖ)` of `r` with `σₖ > cutoff`.
fn svd_terms(
    r: DenseMatrix,
    d1: usize,
    d2: usize,
    cutoff: f64,
) -> Result<Vec<(DenseMatrix, DenseMatrix)>> {
    let Svd { u, sv, v } = checked_svd(&r)?;
    let mut order: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > cutoff).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    Ok(order
        .into_iter()
        .map(|k| {
            let mut a = DenseMatrix::from_column_slice(d1, d1, u.column(k).as_slice()) * sv[k];
            let mut b = DenseMatrix::from_column_slice(d2, d2, v.column(k).as_slice());
            if b.trace() < 0.0 {
                a = -a;
                b = -b;
            }
            (a, b)
        })
        .collect())
}

/// Decomposes a scatter matrix into Kronecker terms via the SVD of its
/// rearrangement, dropping singular values `σₖ ≤ tol·σ₁`.
///
/// The rearrangement is split into its symmetric and antisymmetric parts
/// before the SVD, so every retained symmetric term has exactly symmetric
/// factors. `σₖ` is folded into `Aₖ`; signs are chosen so that `tr(Bₖ) ≥ 0`.
pub fn pvl_decompose(s: &ScatterMatrix, d1: usize, d2: usize, tol: f64) -> Result<PvlTerms> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("PVL tolerance {tol} must be nonnegative")));
    }
    let r = rearrange(s.matrix(), d1, d2)?;
    let sym = symmetric_part(&r, d1, d2);
    let anti = &r - &sym;
    let mut out = PvlTerms::empty(d1, d2);
    if r.norm() > 0.0 {
        let cutoff = tol * r.clone().singular_values().max();
        out.terms = svd_terms(sym, d1, d2, cutoff)?
            .into_iter()
            .map(|(a, b)| (symm(&a), symm(&b)))
            .collect();
        if anti.norm() > cutoff {
            out.antisymmetric = svd_terms(anti, d1, d2, cutoff)?;
        }
    }
    if d1 * d2 <= RECONSTRUCTION_CHECK_CAP && tol <= 1e-10 {
        let norm = s.matrix().norm();
        if norm > 0.0 {
            let err = (out.reconstruct() - s.matrix()).norm() / norm;
            if err > 1e-9 {
                return Err(Error::SvdFailure);
            }
        }
    }
    Ok(out)
}
