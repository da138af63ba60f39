//! Experiment configuration, read from TOML.
//!
//! ```toml
//! kind = "lot"
//!
//! [model]
//! n = 32
//! beta = 0.4
//! profile = { kind = "gaussian", amp = 1.0, width = 0.5 }
//!
//! [integrator]
//! t = 2.0
//!
//! [ensemble]
//! samples = 256
//! seed = 1
//!
//! [output]
//! dir = "out/lot"
//! ```

use crate::dynamics::{default_dt, DataProfile, ModelConfig};
use crate::error::{Error, Result};
use crate::kwe::CollisionConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lot,
    Theorem,
    Kwe,
    WeingartenValidate,
    Rigidity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lot => "lot",
            ExperimentKind::Theorem => "theorem",
            ExperimentKind::Kwe => "kwe",
            ExperimentKind::WeingartenValidate => "weingarten-validate",
            ExperimentKind::Rigidity => "rigidity",
        }
    }
}

fn default_profile() -> DataProfile {
    DataProfile::Gaussian { amp: 1.0, width: 0.5 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "ModelSection::default_n")]
    pub n: usize,
    #[serde(default = "ModelSection::default_beta")]
    pub beta: f64,
    #[serde(default = "default_profile")]
    pub profile: DataProfile,
    /// Overrides μ = N^β.
    #[serde(default)]
    pub coupling: Option<f64>,
    /// Sizes for experiments that sweep N. Empty means the experiment default.
    #[serde(default)]
    pub n_sweep: Vec<usize>,
    /// Window exponent ε for the theorem experiment.
    #[serde(default = "ModelSection::default_epsilon")]
    pub epsilon: f64,
}

impl ModelSection {
    fn default_n() -> usize {
        32
    }
    fn default_beta() -> f64 {
        0.4
    }
    fn default_epsilon() -> f64 {
        0.1
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n: Self::default_n(),
            beta: Self::default_beta(),
            profile: default_profile(),
            coupling: None,
            n_sweep: Vec::new(),
            epsilon: Self::default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// Observation time (lot) or final time (kwe).
    #[serde(default)]
    pub t: Option<f64>,
    /// Theorem experiment: t = t_scale · T_kin^{2/3}.
    #[serde(default)]
    pub t_scale: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "EnsembleSection::default_samples")]
    pub samples: usize,
    /// Ensemble for the N-doubling trend; defaults to 4 × samples.
    #[serde(default)]
    pub trend_samples: Option<usize>,
    #[serde(default = "EnsembleSection::default_seed")]
    pub seed: u64,
}

impl EnsembleSection {
    fn default_samples() -> usize {
        256
    }
    fn default_seed() -> u64 {
        1
    }
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            samples: Self::default_samples(),
            trend_samples: None,
            seed: Self::default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KweSection {
    #[serde(default = "KweSection::default_grid")]
    pub grid: usize,
    #[serde(default = "KweSection::default_q")]
    pub q: usize,
    #[serde(default = "KweSection::default_interp")]
    pub interp_order: usize,
}

impl KweSection {
    fn default_grid() -> usize {
        129
    }
    fn default_q() -> usize {
        32
    }
    fn default_interp() -> usize {
        12
    }

    pub fn collision(&self) -> CollisionConfig {
        CollisionConfig {
            q: self.q,
            interp_order: self.interp_order,
            ..CollisionConfig::default()
        }
    }
}

impl Default for KweSection {
    fn default() -> Self {
        Self {
            grid: Self::default_grid(),
            q: Self::default_q(),
            interp_order: Self::default_interp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "OutputSection::default_dir")]
    pub dir: PathBuf,
}

impl OutputSection {
    fn default_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: Self::default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub kwe: KweSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Per-metric tolerance overrides, keyed by metric name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    /// A config with every section at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            model: ModelSection::default(),
            integrator: IntegratorSection::default(),
            ensemble: EnsembleSection::default(),
            kwe: KweSection::default(),
            output: OutputSection::default(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Model configuration at size `n` with this config's β, profile and coupling.
    pub fn model_at(&self, n: usize) -> Result<ModelConfig> {
        let mut m = ModelConfig::new(n, self.model.beta, self.model.profile.clone())?;
        if let Some(mu) = self.model.coupling {
            m = m.with_coupling(mu);
        }
        let dt = self.integrator.dt.unwrap_or_else(|| default_dt(n, m.mu));
        let t_end = m.t_end;
        m = m.with_time(t_end, dt);
        m.validate()?;
        Ok(m)
    }

    pub fn trend_samples(&self) -> usize {
        self.ensemble.trend_samples.unwrap_or(4 * self.ensemble.samples)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_at(self.model.n)?;
        if self.model.n_sweep.contains(&0) {
            return Err(Error::Config("model.n_sweep entries must be >= 1".into()));
        }
        if !(self.model.epsilon > 0.0 && self.model.epsilon < 0.5) {
            return Err(Error::Config(format!(
                "model.epsilon = {} outside the valid range (0, 1/2)",
                self.model.epsilon
            )));
        }
        if let Some(t) = self.integrator.t {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("integrator.t = {t} must be finite and >= 0")));
            }
        }
        if let Some(c) = self.integrator.t_scale {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("integrator.t_scale = {c} must be > 0")));
            }
        }
        if self.ensemble.samples == 0 {
            return Err(Error::Config("ensemble.samples must be >= 1".into()));
        }
        if self.kwe.grid < 5 {
            return Err(Error::Config(format!("kwe.grid = {} must be >= 5", self.kwe.grid)));
        }
        self.kwe.collision().validate()?;
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Config(format!("tolerances.{k} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}
