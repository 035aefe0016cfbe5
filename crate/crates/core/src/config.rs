//! Run configuration, read from TOML.
//!
//! Every field has a default, so an empty file describes the reference
//! experiment: `d₁ = 15`, `d₂ = 6`, `n = 300`, `γ = 5`, regularized metric
//! with `α = 0.95`, 500 adaptation, 500 burn-in and 2000 retained
//! iterations, `L = 10`, target acceptance 0.8.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::metric::MetricKind;
use crate::model::{PriorKind, PriorSpec};
use crate::samplers::{LeapfrogPolicy, SamplerConfig, SliceDensity, Tempering};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    Gibbs,
    Sglmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub gamma: f64,
    pub sampler: SamplerChoice,
    pub metric: MetricKind,
    /// Slice density of the constrained metrics; unset picks `marginal`
    /// under inverse-Wishart priors and `restricted` otherwise.
    pub slice_density: Option<SliceDensity>,
    pub prior1: PriorKind,
    pub prior2: PriorKind,
    pub n_adapt: usize,
    pub n_burn: usize,
    pub n_samples: usize,
    pub leapfrog: LeapfrogPolicy,
    pub epsilon0: Option<f64>,
    pub target_accept: f64,
    pub tempering: Tempering,
    /// Observations CSV; when absent, `fit` generates data from the seed.
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    /// Also write raw factors as vech rows.
    pub dump_factors: bool,
    pub acf_max_lag: usize,
    /// Singular-value cutoff of the Kronecker decomposition.
    pub pvl_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            d1: 15,
            d2: 6,
            n: 300,
            gamma: 5.0,
            sampler: SamplerChoice::Sglmc,
            metric: MetricKind::Regularized { alpha: 0.95 },
            slice_density: None,
            prior1: PriorKind::default(),
            prior2: PriorKind::default(),
            n_adapt: 500,
            n_burn: 500,
            n_samples: 2000,
            leapfrog: LeapfrogPolicy::Fixed { steps: 10 },
            epsilon0: None,
            target_accept: 0.8,
            tempering: Tempering::Off,
            input: None,
            output: PathBuf::from("out"),
            dump_factors: false,
            acf_max_lag: 40,
            pvl_tol: crate::pvl::DEFAULT_PVL_TOL,
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::Config("d1 and d2 must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.pvl_tol >= 0.0 && self.pvl_tol < 1.0) {
            return Err(Error::Config(format!("pvl_tol = {} must lie in [0, 1)", self.pvl_tol)));
        }
        self.metric.validate().map_err(cfg_err)?;
        self.sampler_config().validate().map_err(cfg_err)?;
        let (p1, p2) = self.priors().map_err(cfg_err)?;
        if self.sampler == SamplerChoice::Gibbs && !(p1.is_conjugate() && p2.is_conjugate()) {
            return Err(Error::Config("the Gibbs sampler requires iw priors".into()));
        }
        if self.slice_density == Some(SliceDensity::Marginal) && !(p1.is_conjugate() && p2.is_conjugate()) {
            return Err(Error::Config("slice_density = \"marginal\" requires iw priors".into()));
        }
        Ok(())
    }

    pub fn priors(&self) -> Result<(PriorSpec, PriorSpec)> {
        Ok((self.prior1.resolve(self.d1, self.gamma)?, self.prior2.resolve(self.d2, self.gamma)?))
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_adapt: self.n_adapt,
            n_burn: self.n_burn,
            n_samples: self.n_samples,
            leapfrog: self.leapfrog,
            epsilon0: self.epsilon0,
            target_accept: self.target_accept,
            seed: self.seed,
            tempering: self.tempering,
        }
    }
}
