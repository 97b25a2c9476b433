//! Flat key/value run configuration.
//!
//! ```toml
//! dataset = "MUTAG"
//! root = "data"
//! m = 1
//! epochs = 10
//! methods = ["gnp", "random", "common"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{Method, MethodSettings};
use crate::error::{Error, Result};
use crate::eval::{ExperimentConfig, ScoringMode};
use crate::features::{FeatureConfig, NodeEncoding};
use crate::gnp::{validate_context_range, GnpConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: String,
    pub root: PathBuf,
    pub m: usize,
    pub r_width: usize,
    pub hidden_width: usize,
    pub degree_scale: f64,
    pub node_encoding: NodeEncoding,
    pub p0: f64,
    pub p1: f64,
    pub epochs: usize,
    pub shuffle: bool,
    pub runs: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub scoring: ScoringMode,
    pub n_trees: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gnp = GnpConfig::default();
        let settings = MethodSettings::default();
        RunConfig {
            dataset: "MUTAG".into(),
            root: PathBuf::from("data"),
            m: gnp.features.m,
            r_width: gnp.r_width,
            hidden_width: gnp.hidden_width,
            degree_scale: gnp.features.degree_scale,
            node_encoding: gnp.features.node_encoding,
            p0: settings.p0,
            p1: settings.p1,
            epochs: settings.epochs,
            shuffle: settings.shuffle,
            runs: 5,
            train_fraction: 0.8,
            seed: 0,
            methods: Method::ALL.to_vec(),
            scoring: ScoringMode::TargetsOnly,
            n_trees: settings.n_trees,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.trim().is_empty() {
            return Err(Error::Config("dataset must name a TU dataset".into()));
        }
        validate_context_range(self.p0, self.p1).map_err(|e| Error::Config(e.to_string()))?;
        self.gnp().features.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.r_width == 0 || self.hidden_width == 0 {
            return Err(Error::Config("r_width and hidden_width must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction = {} is outside (0, 1); use e.g. 0.8",
                self.train_fraction
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods is empty; list at least one, e.g. [\"gnp\"]".into()));
        }
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        Ok(())
    }

    pub fn gnp(&self) -> GnpConfig {
        GnpConfig {
            features: FeatureConfig {
                m: self.m,
                degree_scale: self.degree_scale,
                node_encoding: self.node_encoding,
            },
            r_width: self.r_width,
            hidden_width: self.hidden_width,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            p0: self.p0,
            p1: self.p1,
            epochs: self.epochs,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }

    pub fn settings(&self) -> MethodSettings {
        MethodSettings {
            gnp: self.gnp(),
            p0: self.p0,
            p1: self.p1,
            epochs: self.epochs,
            shuffle: self.shuffle,
            n_trees: self.n_trees,
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            methods: self.methods.clone(),
            runs: self.runs,
            train_fraction: self.train_fraction,
            seed: self.seed,
            settings: self.settings(),
            scoring: self.scoring,
        }
    }
}
