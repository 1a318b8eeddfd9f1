//! Run configuration: a flat TOML file of `key = value` lines.
//!
//! ```toml
//! fleet_spec = "fleet.toml"   # or: data_dir = "sessions"
//! output_dir = "results"
//! seed = 1
//! signals = ["GAS"]           # default: all eight
//! features = [1, 2]           # default: 1..=7
//! ```
//!
//! Every other key has the default shown by [`RunConfig::default`]. Unknown
//! keys are rejected. Relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{BinsMode, ExperimentOptions, DEFAULT_PERCENTAGES, DEFAULT_TRIALS};
use crate::features::FeatureKind;
use crate::histogram::{HistogramOptions, DEFAULT_BIN_COUNT};
use crate::ingest::SignalKind;
use crate::learn::KMeansOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Directory of `<user>__<session>.csv` logs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    /// Fleet spec to generate data from instead of reading logs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fleet_spec: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub signals: Vec<SignalKind>,
    pub features: Vec<FeatureKind>,
    pub min_hours: f64,
    pub bins: usize,
    pub trim_low: f64,
    pub trim_high: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub trials: usize,
    pub percentages: Vec<f64>,
    pub bins_mode: BinsMode,
    pub train_fraction: f64,
    pub kmeans_restarts: usize,
    pub kmeans_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let km = KMeansOptions::default();
        Self {
            data_dir: None,
            fleet_spec: None,
            output_dir: PathBuf::from("results"),
            seed: 0,
            signals: SignalKind::ALL.to_vec(),
            features: FeatureKind::ALL.to_vec(),
            min_hours: 10.0,
            bins: DEFAULT_BIN_COUNT,
            trim_low: 2.0,
            trim_high: 98.0,
            k_min: 2,
            k_max: 10,
            trials: DEFAULT_TRIALS,
            percentages: DEFAULT_PERCENTAGES.to_vec(),
            bins_mode: BinsMode::Local,
            train_fraction: 0.7,
            kmeans_restarts: km.restarts,
            kmeans_tolerance: km.tolerance,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads and validates `path`, resolving relative paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.data_dir.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.fleet_spec.as_mut() {
            resolve(p);
        }
        resolve(&mut config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.data_dir, &self.fleet_spec) {
            (Some(_), Some(_)) => return bad("set only one of data_dir and fleet_spec".into()),
            (None, None) => return bad("one of data_dir or fleet_spec is required".into()),
            _ => {}
        }
        if self.signals.is_empty() || self.features.is_empty() {
            return bad("signals and features must not be empty".into());
        }
        if !(self.min_hours.is_finite() && self.min_hours >= 0.0) {
            return bad(format!("min_hours must be >= 0, got {}", self.min_hours));
        }
        if self.bins == 0 {
            return bad("bins must be >= 1".into());
        }
        if !(0.0 <= self.trim_low && self.trim_low < self.trim_high && self.trim_high <= 100.0) {
            return bad(format!(
                "trim percentiles must satisfy 0 <= low < high <= 100, got {}/{}",
                self.trim_low, self.trim_high
            ));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad(format!(
                "K range must satisfy 1 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            ));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.percentages.is_empty() || self.percentages.iter().any(|&p| !(p > 0.0 && p <= 100.0))
        {
            return bad("percentages must be non-empty and lie in (0, 100]".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self.kmeans_restarts == 0 || !(self.kmeans_tolerance >= 0.0) {
            return bad("kmeans_restarts must be >= 1 and kmeans_tolerance >= 0".into());
        }
        Ok(())
    }

    pub fn ks(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).collect()
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            histogram: HistogramOptions {
                bins: self.bins,
                trim_low: self.trim_low,
                trim_high: self.trim_high,
            },
            kmeans: KMeansOptions {
                restarts: self.kmeans_restarts,
                tolerance: self.kmeans_tolerance,
                ..KMeansOptions::default()
            },
            bins_mode: self.bins_mode,
            train_fraction: self.train_fraction,
        }
    }
}
