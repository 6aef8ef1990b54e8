//! Run configuration: an optional JSON file, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rfm_pyramid::pyramid::KMeansConfig;
use rfm_pyramid::stats::DEFAULT_SIGNIFICANCE;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything in a `--config` file is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub rules: Option<PathBuf>,
    pub analysis_date: Option<NaiveDate>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub significance: Option<f64>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
}

impl ConfigFile {
    /// Relative paths inside the file are taken relative to the file itself.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.rules, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rules: Option<PathBuf>,
    pub analysis_date: Option<NaiveDate>,
    pub kmeans: KMeansConfig,
    pub significance: f64,
    pub out: PathBuf,
    pub strict: bool,
}

/// Flag values that may override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rules: Option<PathBuf>,
    pub analysis_date: Option<NaiveDate>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub significance: Option<f64>,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

impl RunConfig {
    pub fn resolve(file: Option<ConfigFile>, flags: Overrides) -> CliResult<Self> {
        let file = file.unwrap_or_default();
        let defaults = KMeansConfig::default();
        let kmeans = KMeansConfig {
            k: defaults.k,
            seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
            restarts: flags
                .restarts
                .or(file.restarts)
                .unwrap_or(defaults.restarts),
            max_iterations: flags
                .max_iterations
                .or(file.max_iterations)
                .unwrap_or(defaults.max_iterations),
            tolerance: flags
                .tolerance
                .or(file.tolerance)
                .unwrap_or(defaults.tolerance),
        };
        kmeans.validate()?;
        let significance = flags
            .significance
            .or(file.significance)
            .unwrap_or(DEFAULT_SIGNIFICANCE);
        if !(significance > 0.0 && significance < 1.0) {
            return Err(CliError::validation(format!(
                "significance {significance} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            rules: flags.rules.or(file.rules),
            analysis_date: flags.analysis_date.or(file.analysis_date),
            kmeans,
            significance,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            strict: flags.strict || file.strict.unwrap_or(false),
        })
    }
}
