//! Run configuration: a flat TOML file whose keys mirror [`RunConfig`].
//! Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use hurstnn_core::nn::NeighborCount;
use hurstnn_core::synth::{EnsembleKind, EnsembleSpec};
use hurstnn_core::{DfaConfig, EmbeddingConfig, MonthRule, Region};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Price CSV files; relative paths resolve against the config file.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// Region tag per input, same order as `inputs`.
    #[serde(default)]
    pub regions: Vec<String>,
    /// `calendar` or `synthetic-21-day`. Defaults to `calendar` for file
    /// inputs and `synthetic-21-day` for a synthetic ensemble.
    pub month_rule: Option<String>,
    #[serde(default = "defaults::estimation_months")]
    pub estimation_months: usize,
    #[serde(default = "defaults::prediction_months")]
    pub prediction_months: usize,
    #[serde(default = "defaults::roll_months")]
    pub roll_months: usize,
    /// Keep only the most recent months of every series.
    pub recent_months: Option<usize>,
    #[serde(default = "defaults::embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "defaults::time_delay")]
    pub time_delay: usize,
    /// Absent means `floor(sqrt(patterns))`.
    pub neighbor_count: Option<usize>,
    #[serde(default = "defaults::keep_fraction")]
    pub keep_fraction: f64,
    pub exclusion_window: Option<usize>,
    #[serde(default = "defaults::dfa_min_scale")]
    pub dfa_min_scale: usize,
    /// Absent means a quarter of the estimation length.
    pub dfa_max_scale: Option<usize>,
    #[serde(default = "defaults::dfa_scale_count")]
    pub dfa_scale_count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; absent or 0 uses all cores.
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    /// `random-walk` or `fgn`.
    pub synthetic_kind: Option<String>,
    #[serde(default)]
    pub synthetic_count: usize,
    #[serde(default = "defaults::synthetic_months")]
    pub synthetic_months: usize,
    #[serde(default = "defaults::synthetic_hurst_min")]
    pub synthetic_hurst_min: f64,
    #[serde(default = "defaults::synthetic_hurst_max")]
    pub synthetic_hurst_max: f64,
    #[serde(default)]
    pub synthetic_mean: f64,
    #[serde(default = "defaults::synthetic_std")]
    pub synthetic_std: f64,
    /// Replace every input by a random walk with its length, mean and std.
    #[serde(default)]
    pub surrogates: bool,
}

mod defaults {
    pub fn estimation_months() -> usize {
        60
    }
    pub fn prediction_months() -> usize {
        12
    }
    pub fn roll_months() -> usize {
        12
    }
    pub fn embedding_dim() -> usize {
        4
    }
    pub fn time_delay() -> usize {
        1
    }
    pub fn keep_fraction() -> f64 {
        0.5
    }
    pub fn dfa_min_scale() -> usize {
        4
    }
    pub fn dfa_scale_count() -> usize {
        20
    }
    pub fn synthetic_months() -> usize {
        180
    }
    pub fn synthetic_hurst_min() -> f64 {
        0.4
    }
    pub fn synthetic_hurst_max() -> f64 {
        0.75
    }
    pub fn synthetic_std() -> f64 {
        0.01
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

/// Where the indexes of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Files(Vec<(PathBuf, Region)>),
    Synthetic(EnsembleSpec),
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut cfg.inputs {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Source::Synthetic(_) = self.source()? {
            if self.surrogates {
                return Err(invalid("`surrogates` applies to file inputs only"));
            }
        }
        self.month_rule()?;
        self.embedding().validate().map_err(|e| invalid(e.to_string()))?;
        for (name, v) in [
            ("estimation_months", self.estimation_months),
            ("prediction_months", self.prediction_months),
            ("roll_months", self.roll_months),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if self.recent_months == Some(0) {
            return Err(invalid("recent_months must be positive"));
        }
        if self.dfa_min_scale < hurstnn_core::dfa::MIN_SCALE {
            return Err(invalid(format!(
                "dfa_min_scale must be at least {}",
                hurstnn_core::dfa::MIN_SCALE
            )));
        }
        if self.dfa_scale_count < hurstnn_core::dfa::MIN_FIT_POINTS {
            return Err(invalid(format!(
                "dfa_scale_count must be at least {}",
                hurstnn_core::dfa::MIN_FIT_POINTS
            )));
        }
        if let Some(max) = self.dfa_max_scale {
            if max < self.dfa_min_scale {
                return Err(invalid("dfa_max_scale below dfa_min_scale"));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> Result<Source, ConfigError> {
        match (self.inputs.is_empty(), self.synthetic_count) {
            (false, 0) => {
                if !self.regions.is_empty() && self.regions.len() != self.inputs.len() {
                    return Err(invalid(format!(
                        "{} regions given for {} inputs",
                        self.regions.len(),
                        self.inputs.len()
                    )));
                }
                let regions = if self.regions.is_empty() {
                    vec![Region::Other; self.inputs.len()]
                } else {
                    self.regions
                        .iter()
                        .map(|r| r.parse::<Region>().map_err(invalid))
                        .collect::<Result<_, _>>()?
                };
                let mut seen = std::collections::HashSet::new();
                for p in &self.inputs {
                    if !seen.insert(index_id_of(p)) {
                        return Err(invalid(format!(
                            "two inputs share the index id `{}`",
                            index_id_of(p)
                        )));
                    }
                }
                Ok(Source::Files(self.inputs.iter().cloned().zip(regions).collect()))
            }
            (true, 0) => Err(invalid("set either `inputs` or `synthetic_count`")),
            (false, _) => Err(invalid("`inputs` and `synthetic_count` are mutually exclusive")),
            (true, count) => Ok(Source::Synthetic(self.ensemble(count)?)),
        }
    }

    pub fn ensemble(&self, count: usize) -> Result<EnsembleSpec, ConfigError> {
        let kind = match self.synthetic_kind.as_deref() {
            Some("random-walk") => EnsembleKind::RandomWalk,
            Some("fgn") | None => {
                if !(0.0 < self.synthetic_hurst_min
                    && self.synthetic_hurst_min <= self.synthetic_hurst_max
                    && self.synthetic_hurst_max < 1.0)
                {
                    return Err(invalid(
                        "synthetic Hurst range must satisfy 0 < min <= max < 1",
                    ));
                }
                EnsembleKind::Fgn {
                    hurst_min: self.synthetic_hurst_min,
                    hurst_max: self.synthetic_hurst_max,
                }
            }
            Some(other) => {
                return Err(invalid(format!(
                    "unknown synthetic_kind `{other}` (expected `random-walk` or `fgn`)"
                )))
            }
        };
        if !(self.synthetic_std > 0.0) {
            return Err(invalid("synthetic_std must be positive"));
        }
        if self.synthetic_months == 0 {
            return Err(invalid("synthetic_months must be positive"));
        }
        Ok(EnsembleSpec {
            kind,
            count,
            length: self.synthetic_months * hurstnn_core::series::SYNTHETIC_MONTH_LEN,
            mean: self.synthetic_mean,
            std: self.synthetic_std,
            seed: self.seed,
        })
    }

    pub fn month_rule(&self) -> Result<MonthRule, ConfigError> {
        match &self.month_rule {
            Some(s) => s.parse().map_err(invalid),
            None if self.synthetic_count > 0 => Ok(MonthRule::Synthetic21Day),
            None => Ok(MonthRule::Calendar),
        }
    }

    pub fn embedding(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            embedding_dim: self.embedding_dim,
            time_delay: self.time_delay,
            neighbor_count: match self.neighbor_count {
                Some(k) => NeighborCount::Fixed(k),
                None => NeighborCount::SqrtPatterns,
            },
            keep_fraction: self.keep_fraction,
            exclusion_window: self.exclusion_window,
        }
    }

    pub fn dfa(&self) -> DfaConfig {
        DfaConfig {
            min_scale: self.dfa_min_scale,
            max_scale: self.dfa_max_scale,
            scale_count: self.dfa_scale_count,
        }
    }
}

/// Index identifier of an input file: its stem.
pub fn index_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
