//! Chain summaries, autocorrelation, effective sample size and two-sample
//! Kolmogorov–Smirnov distance.

use serde::{Deserialize, Serialize};

use crate::model::SeparableState;
use crate::spd::spd_eig;
use crate::{Error, Result};

/// Minimum series length accepted by [`ess`].
pub const MIN_ESS_LEN: usize = 10;

/// Names of the per-sample summary statistics, in CSV column order.
pub const SUMMARY_COLUMNS: [&str; 8] =
    ["tr1", "tr2", "tr_kron", "logdet1", "logdet2", "logdet_kron", "cond1", "cond2"];

/// Per-sample statistics of `(Σ₁, Σ₂)` and of `Σ₁ ⊗ Σ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub tr1: f64,
    pub tr2: f64,
    pub tr_kron: f64,
    pub logdet1: f64,
    pub logdet2: f64,
    pub logdet_kron: f64,
    pub cond1: f64,
    pub cond2: f64,
}

impl SummaryRecord {
    pub fn values(&self) -> [f64; 8] {
        [
            self.tr1,
            self.tr2,
            self.tr_kron,
            self.logdet1,
            self.logdet2,
            self.logdet_kron,
            self.cond1,
            self.cond2,
        ]
    }

    pub fn from_values(v: [f64; 8]) -> Self {
        Self {
            tr1: v[0],
            tr2: v[1],
            tr_kron: v[2],
            logdet1: v[3],
            logdet2: v[4],
            logdet_kron: v[5],
            cond1: v[6],
            cond2: v[7],
        }
    }

    /// Value of the statistic named as in [`SUMMARY_COLUMNS`].
    pub fn get(&self, name: &str) -> Option<f64> {
        SUMMARY_COLUMNS.iter().position(|c| *c == name).map(|i| self.values()[i])
    }
}

/// Computes the summary through the mixed trace and determinant identities,
/// `tr(Σ₁⊗Σ₂) = tr Σ₁ · tr Σ₂` and `log|Σ₁⊗Σ₂| = d₂ log|Σ₁| + d₁ log|Σ₂|`.
pub fn summarize(state: &SeparableState) -> Result<SummaryRecord> {
    let (d1, d2) = (state.d1() as f64, state.d2() as f64);
    let tr1 = state.sigma1.trace();
    let tr2 = state.sigma2.trace();
    let logdet1 = state.sigma1.log_det();
    let logdet2 = state.sigma2.log_det();
    let cond = |e: &crate::spd::SymEigen| e.values[0] / e.values[e.values.len() - 1];
    Ok(SummaryRecord {
        tr1,
        tr2,
        tr_kron: tr1 * tr2,
        logdet1,
        logdet2,
        logdet_kron: d2 * logdet1 + d1 * logdet2,
        cond1: cond(&spd_eig(&state.sigma1)?),
        cond2: cond(&spd_eig(&state.sigma2)?),
    })
}

/// A named sequence of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl ScalarSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { name: name.into(), values })
    }

    /// One series per summary statistic.
    pub fn from_records(records: &[SummaryRecord]) -> Vec<ScalarSeries> {
        SUMMARY_COLUMNS
            .iter()
            .enumerate()
            .map(|(i, name)| ScalarSeries {
                name: (*name).to_string(),
                values: records.iter().map(|r| r.values()[i]).collect(),
            })
            .collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Biased autocovariance `(1/n) Σₜ (xₜ − x̄)(xₜ₊ₖ − x̄)`.
fn autocov(x: &[f64], m: f64, k: usize) -> f64 {
    let n = x.len();
    x[..n - k].iter().zip(&x[k..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64
}

/// Autocorrelations at lags `0..=max_lag`, normalized by the lag-0
/// autocovariance. A constant series has `acf = [1, 0, 0, …]`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::InvalidParameter(format!(
            "series of length {} too short for lag {max_lag}",
            x.len()
        )));
    }
    let m = mean(x);
    let c0 = autocov(x, m, 0);
    let mut out = vec![1.0];
    for k in 1..=max_lag {
        out.push(if c0 > 0.0 { autocov(x, m, k) / c0 } else { 0.0 });
    }
    Ok(out)
}

/// Effective sample size `n / τ` with `τ = −1 + 2 Σₖ Γₖ`, where
/// `Γₖ = ρ₂ₖ + ρ₂ₖ₊₁` summed over the initial positive sequence. `τ` is
/// floored at `1/3`, so the estimate never exceeds `3n`.
pub fn ess(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < MIN_ESS_LEN {
        return Err(Error::InvalidParameter(format!(
            "ESS needs at least {MIN_ESS_LEN} draws, got {n}"
        )));
    }
    let m = mean(x);
    let c0 = autocov(x, m, 0);
    if c0 <= 0.0 {
        return Ok(n as f64);
    }
    let rho = |k: usize| if k < n { autocov(x, m, k) / c0 } else { 0.0 };
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let gamma = rho(2 * k) + rho(2 * k + 1);
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / 3.0);
    Ok(n as f64 / tau)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyData);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::NonFinite);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
