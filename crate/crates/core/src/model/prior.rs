use serde::{Deserialize, Serialize};

use crate::kron::symm;
use crate::spd::{spd_eig, SpdMatrix, SymEigen};
use crate::{DenseMatrix, Error, Result};

/// Relative eigenvalue gap below which the eigenvalue-repulsion terms are
/// considered undefined.
pub const EIGEN_GAP_REL: f64 = 1e-8;

/// Prior on a single factor.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// `p(Σ) ∝ |Σ|^{-(ν+d+1)/2} exp(−½ tr(TΣ⁻¹))`.
    InverseWishart { nu: f64, scale: SpdMatrix },
    /// `p(Σ) ∝ exp(−½ c tr(Σ⁻¹)) |Σ|^{-a} Πₖ<ⱼ (λₖ − λⱼ)⁻¹`.
    ShrinkageInverseWishart { a: f64, c: f64 },
    /// `p(Σ) ∝ |Σ|⁻¹ Πₖ<ⱼ (λₖ − λⱼ)⁻¹`. Propriety for this model is not
    /// established; treat as experimental.
    Reference,
}

/// Serializable description of a prior, resolved against a dimension and
/// `γ` by [`PriorKind::resolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorKind {
    /// Defaults to `ν = d + 2`, `T = (γ/d) I`.
    Iw { nu: Option<f64>, scale: Option<f64> },
    /// Defaults to `a = 3`, `c = √γ/d`.
    Siw { a: Option<f64>, c: Option<f64> },
    Reference,
}

impl PriorKind {
    pub fn resolve(&self, d: usize, gamma: f64) -> Result<PriorSpec> {
        let df = d as f64;
        match *self {
            PriorKind::Iw { nu, scale } => {
                let nu = nu.unwrap_or(df + 2.0);
                let s = scale.unwrap_or(gamma / df);
                PriorSpec::inverse_wishart(nu, SpdMatrix::identity(d).scaled(s)?)
            }
            PriorKind::Siw { a, c } => {
                PriorSpec::siw(a.unwrap_or(3.0), c.unwrap_or(gamma.sqrt() / df))
            }
            PriorKind::Reference => Ok(PriorSpec::Reference),
        }
    }
}

impl Default for PriorKind {
    fn default() -> Self {
        PriorKind::Iw { nu: None, scale: None }
    }
}

impl PriorSpec {
    pub fn inverse_wishart(nu: f64, scale: SpdMatrix) -> Result<Self> {
        let d = scale.dim() as f64;
        if !(nu > d - 1.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse-Wishart degrees of freedom {nu} must exceed d - 1 = {}",
                d - 1.0
            )));
        }
        Ok(PriorSpec::InverseWishart { nu, scale })
    }

    pub fn siw(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && a.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "SIW parameters a = {a}, c = {c} must be positive"
            )));
        }
        Ok(PriorSpec::ShrinkageInverseWishart { a, c })
    }

    /// `IW(d + 2, (γ/d) I)`, the conjugate prior used for inference.
    pub fn default_inference(d: usize, gamma: f64) -> Result<Self> {
        let df = d as f64;
        Self::inverse_wishart(df + 2.0, SpdMatrix::identity(d).scaled(gamma / df)?)
    }

    /// `IW(d + 10, (√γ/d) I)`, the distribution used to draw ground-truth factors.
    pub fn generation(d: usize, gamma: f64) -> Result<Self> {
        let df = d as f64;
        Self::inverse_wishart(df + 10.0, SpdMatrix::identity(d).scaled(gamma.sqrt() / df)?)
    }

    /// SIW with `a = 3` and `c = √γ/d`, matching the first two moments of the
    /// default inverse-Wishart.
    pub fn siw_moment_matched(d: usize, gamma: f64) -> Result<Self> {
        Self::siw(3.0, gamma.sqrt() / d as f64)
    }

    pub fn is_conjugate(&self) -> bool {
        matches!(self, PriorSpec::InverseWishart { .. })
    }

    /// Checks compatibility with a factor of dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if let PriorSpec::InverseWishart { scale, .. } = self {
            if scale.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "prior scale is {0}x{0} but factor is {d}x{d}",
                    scale.dim()
                )));
            }
        }
        Ok(())
    }

    /// Log-density up to a constant and its Euclidean gradient.
    pub fn logpdf_grad(&self, sigma: &SpdMatrix) -> Result<(f64, DenseMatrix)> {
        self.validate(sigma.dim())?;
        match self {
            PriorSpec::InverseWishart { nu, scale } => iw_logpdf_grad(sigma, *nu, scale),
            PriorSpec::ShrinkageInverseWishart { a, c } => siw_logpdf_grad(sigma, *a, *c),
            PriorSpec::Reference => reference_logpdf_grad(sigma),
        }
    }
}

/// Inverse-Wishart log-density (up to a constant) and gradient.
pub fn iw_logpdf_grad(sigma: &SpdMatrix, nu: f64, t: &SpdMatrix) -> Result<(f64, DenseMatrix)> {
    let d = sigma.dim();
    if t.dim() != d {
        return Err(Error::DimensionMismatch(format!("IW scale {} vs factor {d}", t.dim())));
    }
    let df = d as f64;
    if !(nu > df - 1.0) {
        return Err(Error::InvalidParameter(format!("IW degrees of freedom {nu} <= d - 1")));
    }
    let inv = sigma.inverse();
    let coef = 0.5 * (nu + df + 1.0);
    let t_inv = t.matrix() * &inv;
    let value = -coef * sigma.log_det() - 0.5 * t_inv.trace();
    let grad = &inv * (-coef) + &inv * t_inv * 0.5;
    Ok((value, symm(&grad)))
}

fn checked_eig(sigma: &SpdMatrix) -> Result<SymEigen> {
    let eig = spd_eig(sigma)?;
    let lmax = eig.values[0];
    let threshold = EIGEN_GAP_REL * lmax;
    for k in 1..eig.values.len() {
        let gap = eig.values[k - 1] - eig.values[k];
        if gap < threshold {
            return Err(Error::NearDegenerateEigenvalues { gap, threshold });
        }
    }
    Ok(eig)
}

/// Spectral projectors `Pₖ = qₖqₖᵀ`, ordered with descending eigenvalues.
pub fn eigen_projectors(eig: &SymEigen) -> Vec<DenseMatrix> {
    eig.vectors
        .column_iter()
        .map(|q| q * q.transpose())
        .collect()
}

/// Spectral projectors through the Vandermonde system
/// `Σ^{i} = Σₖ λₖ^{i} Pₖ`, i.e. `Pₖ = Σᵢ (V⁻¹)ₖᵢ Σ^{i}` with `Vᵢₖ = λₖ^{i}`.
///
/// Requires distinct eigenvalues. The system is solved on `Σ/λmax` to keep
/// the powers bounded; conditioning still degrades quickly with `d`.
pub fn vandermonde_projectors(sigma: &SpdMatrix) -> Result<Vec<DenseMatrix>> {
    let eig = checked_eig(sigma)?;
    let d = sigma.dim();
    let lmax = eig.values[0];
    let lam: Vec<f64> = eig.values.iter().map(|x| x / lmax).collect();
    let v = DenseMatrix::from_fn(d, d, |i, k| lam[k].powi(i as i32));
    let v_inv = v.try_inverse().ok_or(Error::NearDegenerateEigenvalues {
        gap: 0.0,
        threshold: EIGEN_GAP_REL * lmax,
    })?;
    let scaled = sigma.matrix() / lmax;
    let mut powers = Vec::with_capacity(d);
    let mut p = DenseMatrix::identity(d, d);
    for _ in 0..d {
        powers.push(p.clone());
        p = &p * &scaled;
    }
    Ok((0..d)
        .map(|k| {
            let mut acc = DenseMatrix::zeros(d, d);
            for (i, pw) in powers.iter().enumerate() {
                acc += pw * v_inv[(k, i)];
            }
            symm(&acc)
        })
        .collect())
}

/// `Σₖ<ⱼ log(λₖ − λⱼ)` and its gradient `Σₖ<ⱼ (Pₖ − Pⱼ)/(λₖ − λⱼ)`.
#[allow(clippy::needless_range_loop)]
fn log_gap_term(eig: &SymEigen) -> (f64, DenseMatrix) {
    let d = eig.values.len();
    let proj = eigen_projectors(eig);
    let mut value = 0.0;
    let mut grad = DenseMatrix::zeros(d, d);
    for k in 0..d {
        let mut coef = 0.0;
        for j in 0..d {
            if j == k {
                continue;
            }
            let gap = eig.values[k] - eig.values[j];
            coef += 1.0 / gap;
            if j > k {
                value += gap.ln();
            }
        }
        grad += &proj[k] * coef;
    }
    (value, symm(&grad))
}

/// Shrinkage inverse-Wishart log-density (up to a constant) and gradient.
pub fn siw_logpdf_grad(sigma: &SpdMatrix, a: f64, c: f64) -> Result<(f64, DenseMatrix)> {
    let eig = checked_eig(sigma)?;
    let (gap_value, gap_grad) = log_gap_term(&eig);
    let inv = sigma.inverse();
    let value = -0.5 * c * inv.trace() - a * sigma.log_det() - gap_value;
    let grad = &inv * &inv * (0.5 * c) - &inv * a - gap_grad;
    Ok((value, symm(&grad)))
}

/// Reference-prior log-density (up to a constant) and gradient.
pub fn reference_logpdf_grad(sigma: &SpdMatrix) -> Result<(f64, DenseMatrix)> {
    let eig = checked_eig(sigma)?;
    let (gap_value, gap_grad) = log_gap_term(&eig);
    let inv = sigma.inverse();
    let value = -sigma.log_det() - gap_value;
    let grad = -inv - gap_grad;
    Ok((value, symm(&grad)))
}
