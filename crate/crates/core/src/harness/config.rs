//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bistro::HorizonMode;
use crate::erm::ConstraintDoc;
use crate::error::{Error, Result};
use crate::policy::PolicyClassDoc;
use crate::rademacher::DEFAULT_TUNING_SAMPLES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bistro,
    BistroRegularized,
    BistroRelaxed,
    AdversarialReduction,
    Uniform,
    Egreedy,
    Ftl,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// `"auto"` or an explicit value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaDoc {
    Value(f64),
    Keyword(String),
}

impl Default for GammaDoc {
    fn default() -> Self {
        GammaDoc::Keyword("auto".into())
    }
}

impl GammaDoc {
    /// `None` for `"auto"`.
    pub fn value(&self) -> Result<Option<f64>> {
        match self {
            GammaDoc::Value(v) => Ok(Some(*v)),
            GammaDoc::Keyword(k) if k == "auto" => Ok(None),
            GammaDoc::Keyword(k) => Err(Error::Config(format!("gamma must be a number or \"auto\", got `{k}`"))),
        }
    }
}

/// Context law: either a bare probability vector or an object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContextDistDoc {
    Probs(Vec<f64>),
    Spec {
        #[serde(default)]
        universe: Option<usize>,
        #[serde(default)]
        probs: Option<Vec<f64>>,
        #[serde(default)]
        features: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostProcessDoc {
    /// Headerless CSV (`path`, relative to the config file) or inline `rows`.
    FixedTable {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        rows: Option<Vec<Vec<f64>>>,
    },
    IidBernoulli { means: Vec<Vec<f64>> },
    Adaptive { rule: String },
}

fn default_sign_scale() -> f64 {
    2.0
}

fn default_playouts() -> usize {
    1
}

fn default_pool_factor() -> usize {
    10
}

fn default_rad_samples() -> usize {
    DEFAULT_TUNING_SAMPLES
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_algorithm() -> Algorithm {
    Algorithm::Bistro
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub horizon_mode: HorizonMode,
    pub context_dist: ContextDistDoc,
    pub policy_class: PolicyClassDoc,
    pub cost_process: CostProcessDoc,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub gamma: GammaDoc,
    #[serde(default = "default_sign_scale")]
    pub sign_scale: f64,
    #[serde(default = "default_playouts")]
    pub playouts: usize,
    #[serde(default)]
    pub constraint: Option<ConstraintDoc>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default, rename = "K")]
    pub k: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_pool_factor")]
    pub pool_factor: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_rad_samples")]
    pub rad_samples: usize,
    #[serde(default)]
    pub rad_seed: u64,
    #[serde(default)]
    pub partial_mixing: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub full_info: Option<String>,
    /// Directory that relative paths resolve against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if self.playouts == 0 {
            return Err(Error::Config("playouts must be at least 1".into()));
        }
        if self.pool_factor == 0 {
            return Err(Error::Config("pool_factor must be at least 1".into()));
        }
        if self.rad_samples == 0 {
            return Err(Error::Config("rad_samples must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config("delta must be nonnegative".into()));
        }
        self.gamma.value()?;
        if self.k.is_some() && self.constraint.is_none() {
            return Err(Error::Config("`K` needs a `constraint`".into()));
        }
        if self.algorithm == Algorithm::BistroRegularized && (self.constraint.is_none() || self.k.is_none()) {
            return Err(Error::Config("bistro_regularized needs `constraint` and `K`".into()));
        }
        if let Some(f) = &self.full_info {
            if f != "expweights" {
                return Err(Error::Config(format!("unknown full_info relaxation `{f}`")));
            }
        }
        Ok(())
    }
}
