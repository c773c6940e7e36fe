//! Run configuration: TOML file, flag overrides, mode-dependent defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::Alignment;
use crate::error::{invalid, Result};
use crate::hmm::DEFAULT_VAR_FLOOR;
use crate::preprocess::ZScope;
use crate::states::K_RANGE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fmri,
    Questionnaire,
}

impl Mode {
    pub fn default_k(self) -> usize {
        match self {
            Mode::Fmri => 7,
            Mode::Questionnaire => 5,
        }
    }

    pub fn default_scope(self) -> ZScope {
        match self {
            Mode::Fmri => ZScope::PerEntity,
            Mode::Questionnaire => ZScope::Pooled,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = crate::error::CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fmri" => Ok(Mode::Fmri),
            "questionnaire" => Ok(Mode::Questionnaire),
            other => Err(invalid!("unknown mode '{other}' (expected fmri or questionnaire)")),
        }
    }
}

/// Fully resolved settings. Serialized verbatim into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Pseudo-count added to transition counts before the HMM is built.
    pub smoothing: f64,
    pub var_floor: f64,
    /// `false` computes change vectors on unstandardized signals.
    pub standardize: bool,
    pub zscore_scope: ZScope,
    pub exclude_baseline: bool,
    pub baseline_timepoint: i64,
    pub complete_case: bool,
    pub max_timepoint: i64,
    pub lag: usize,
    pub alignment: Alignment,
    /// Scan columns to read; all columns when empty.
    pub rois: Vec<String>,
    /// Columns averaged into the raw condition curve.
    pub signal_rois: Vec<String>,
    pub stratum: Option<String>,
}

/// Every field optional; used for both the TOML file and command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub smoothing: Option<f64>,
    pub var_floor: Option<f64>,
    pub standardize: Option<bool>,
    pub zscore_scope: Option<ZScope>,
    pub exclude_baseline: Option<bool>,
    pub baseline_timepoint: Option<i64>,
    pub complete_case: Option<bool>,
    pub max_timepoint: Option<i64>,
    pub lag: Option<usize>,
    pub alignment: Option<Alignment>,
    pub rois: Option<Vec<String>>,
    pub signal_rois: Option<Vec<String>>,
    pub stratum: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )+
    };
}

impl ConfigOverrides {
    /// Fields set in `top` replace those in `self`.
    pub fn merge(mut self, top: ConfigOverrides) -> Self {
        overlay!(
            self, top, mode, k, k_min, k_max, seed, max_iter, smoothing, var_floor, standardize,
            zscore_scope, exclude_baseline, baseline_timepoint, complete_case, max_timepoint, lag,
            alignment, rois, signal_rois, stratum
        );
        self
    }

    pub fn resolve(self, default_mode: Mode) -> Result<RunConfig> {
        let mode = self.mode.unwrap_or(default_mode);
        let cfg = RunConfig {
            mode,
            k: self.k.unwrap_or(mode.default_k()),
            k_min: self.k_min.unwrap_or(5),
            k_max: self.k_max.unwrap_or(9),
            seed: self.seed.unwrap_or(0),
            max_iter: self.max_iter.unwrap_or(300),
            smoothing: self.smoothing.unwrap_or(1e-6),
            var_floor: self.var_floor.unwrap_or(DEFAULT_VAR_FLOOR),
            standardize: self.standardize.unwrap_or(true),
            zscore_scope: self.zscore_scope.unwrap_or(mode.default_scope()),
            exclude_baseline: self.exclude_baseline.unwrap_or(mode == Mode::Questionnaire),
            baseline_timepoint: self.baseline_timepoint.unwrap_or(0),
            complete_case: self.complete_case.unwrap_or(true),
            max_timepoint: self.max_timepoint.unwrap_or(12),
            lag: self.lag.unwrap_or(0),
            alignment: self.alignment.unwrap_or_default(),
            rois: self.rois.unwrap_or_default(),
            signal_rois: self
                .signal_rois
                .unwrap_or_else(|| vec!["roi_7".into(), "roi_8".into()]),
            stratum: self.stratum,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid!("config: {}", e.message()))
    }
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        ConfigOverrides::default()
            .resolve(mode)
            .expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_min > self.k_max || !K_RANGE.contains(&self.k_min) || !K_RANGE.contains(&self.k_max) {
            return Err(invalid!(
                "K range {}..={} must lie within {}..={}",
                self.k_min,
                self.k_max,
                K_RANGE.start(),
                K_RANGE.end()
            ));
        }
        if !(self.k_min..=self.k_max).contains(&self.k) {
            return Err(invalid!("K = {} outside the configured range {}..={}", self.k, self.k_min, self.k_max));
        }
        if self.max_iter == 0 {
            return Err(invalid!("max_iter must be at least 1"));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(invalid!("smoothing must be finite and >= 0"));
        }
        if !(self.var_floor > 0.0 && self.var_floor.is_finite()) {
            return Err(invalid!("var_floor must be positive"));
        }
        if self.max_timepoint < 1 {
            return Err(invalid!("max_timepoint must be at least 1"));
        }
        if self.rois.iter().chain(&self.signal_rois).any(|r| r.is_empty()) {
            return Err(invalid!("ROI names must be nonempty"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Config plus its hash, as embedded in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStamp {
    pub config: RunConfig,
    pub config_hash: String,
}

impl RunStamp {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            config_hash: config.hash(),
        }
    }
}
