//! Kronecker products and (half-)vectorization.
//!
//! `vec` stacks columns: `vec([[1,3],[2,4]]) = [1,2,3,4]`. `vech` stacks the
//! lower triangle column by column. Both orders are fixed crate-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{DenseMatrix, DenseVector, Error, Result};

/// Default cap on the side length of a materialized Kronecker product.
pub const DEFAULT_KRON_CAP: usize = 64;

/// Relative asymmetry tolerance accepted by [`vech`] and the SPD constructors.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense Kronecker product `A ⊗ B`; block `(i, j)` equals `a_ij · B`.
///
/// Unrestricted; library code that may see user-sized factors goes through
/// [`kron_capped`] instead.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = DenseMatrix::zeros(m * p, n * q);
    for j in 0..n {
        for i in 0..m {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            let mut block = out.view_mut((i * p, j * q), (p, q));
            block.zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}

/// [`kron`] that refuses to build products larger than `cap × cap`.
pub fn kron_capped(a: &DenseMatrix, b: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    let size = (a.nrows() * b.nrows()).max(a.ncols() * b.ncols());
    if size > cap {
        return Err(Error::KronTooLarge { size, cap });
    }
    Ok(kron(a, b))
}

/// Column-stacking vectorization.
pub fn vec(a: &DenseMatrix) -> DenseVector {
    DenseVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`]: reshape a vector into a `rows × cols` matrix, column-major.
pub fn mat(v: &DenseVector, rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DenseMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Length of `vech` for a `d × d` matrix.
pub fn vech_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Relative asymmetry `‖A − Aᵀ‖_F / max(‖A‖_F, tiny)`.
pub fn asymmetry(a: &DenseMatrix) -> f64 {
    let n = a.nrows();
    let mut diff = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            let d = a[(i, j)] - a[(j, i)];
            diff += 2.0 * d * d;
        }
    }
    let norm = a.norm();
    if norm == 0.0 {
        0.0
    } else {
        diff.sqrt() / norm
    }
}

fn check_square(a: &DenseMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Half-vectorization of a symmetric matrix (lower triangle, column-major).
pub fn vech(a: &DenseMatrix) -> Result<DenseVector> {
    let d = check_square(a)?;
    let asym = asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let mut out = Vec::with_capacity(vech_len(d));
    for j in 0..d {
        for i in j..d {
            out.push(a[(i, j)]);
        }
    }
    Ok(DenseVector::from_vec(out))
}

/// Inverse of [`vech`].
pub fn unvech(v: &DenseVector) -> Result<DenseMatrix> {
    let d = dim_from_vech_len(v.len()).ok_or_else(|| {
        Error::DimensionMismatch(format!("{} is not a triangular number", v.len()))
    })?;
    let mut out = DenseMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            out[(i, j)] = v[k];
            out[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(out)
}

/// `d` such that `d(d+1)/2 == len`, if any.
pub fn dim_from_vech_len(len: usize) -> Option<usize> {
    let mut d = 0;
    while vech_len(d) < len {
        d += 1;
    }
    (vech_len(d) == len).then_some(d)
}

/// Position of `A[i, j]` (with `i ≥ j`) inside `vech(A)`.
pub fn vech_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    // columns 0..j contribute d, d-1, ..., d-j+1 entries
    j * d - j * j.saturating_sub(1) / 2 + (i - j)
}

/// `(A + Aᵀ) / 2`.
pub fn symm(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}

/// Duplication matrix `D_d` and its Moore–Penrose inverse `D_d⁺`.
#[derive(Debug, Clone)]
pub struct DuplicationPair {
    pub d: usize,
    /// `d² × d(d+1)/2`, `D · vech(S) = vec(S)`.
    pub dup: DenseMatrix,
    /// `d(d+1)/2 × d²`, `(DᵀD)⁻¹Dᵀ`.
    pub dup_plus: DenseMatrix,
}

fn build_duplication(d: usize) -> DuplicationPair {
    let h = vech_len(d);
    let mut dup = DenseMatrix::zeros(d * d, h);
    for j in 0..d {
        for i in 0..d {
            dup[(j * d + i, vech_index(d, i, j))] = 1.0;
        }
    }
    // DᵀD is diagonal: 1 on diagonal entries, 2 on off-diagonal pairs.
    let mut dup_plus = dup.transpose();
    for k in 0..h {
        let count: f64 = dup.column(k).sum();
        dup_plus.row_mut(k).scale_mut(1.0 / count);
    }
    DuplicationPair { d, dup, dup_plus }
}

/// Cached duplication pair for dimension `d ≥ 1`.
pub fn duplication(d: usize) -> Arc<DuplicationPair> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DuplicationPair>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(d)
        .or_insert_with(|| Arc::new(build_duplication(d)))
        .clone()
}

/// Commutation matrix `K_{m,n}` with `K · vec(A) = vec(Aᵀ)` for `A` of size `m × n`.
pub fn commutation(m: usize, n: usize) -> Arc<DenseMatrix> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<DenseMatrix>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((m, n))
        .or_insert_with(|| {
            let mut k = DenseMatrix::zeros(m * n, m * n);
            for j in 0..n {
                for i in 0..m {
                    k[(i * n + j, j * m + i)] = 1.0;
                }
            }
            Arc::new(k)
        })
        .clone()
}

/// `yᵀ (A ⊗ B) y` without forming `A ⊗ B`.
///
/// `y` is reshaped column-major into `M` of size `d_B × d_A`; the value is
/// `tr(Mᵀ B M Aᵀ)`.
pub fn kron_quadratic_form(y: &DenseVector, a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let da = check_square(a)?;
    let db = check_square(b)?;
    if y.len() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} != {da}*{db}",
            y.len()
        )));
    }
    let m = mat(y, db, da)?;
    let bm = b * &m;
    let ma = &m * a.transpose();
    // tr(Mᵀ B M Aᵀ) = Σ_ij (B M)_ij (M Aᵀ)_ij
    Ok(bm.component_mul(&ma).sum())
}
