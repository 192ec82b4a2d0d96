//! TOML run configuration.
//!
//! ```toml
//! output_dir = "out"
//! seed = 7
//! levels = [0.90, 0.95, 0.99]
//! portfolio_amount = 1.0
//!
//! [model]
//! variance = "egarch"              # or "garch11"
//! distribution = "skew_student_t"  # normal | student_t | skew_student_t
//! joint = "student_t"              # normal | student_t
//! mean = { ar = 0, ma = 0, constant = true }
//! # max_iter = 500
//!
//! [[assets]]
//! symbol = "DJI"
//! source = "data/dji.csv"          # path relative to this file, or URL
//! columns = { date = "Date", close = "Adj Close", skip_missing = true }
//!
//! [[periods]]
//! name = "during"
//! start = "2020-01-01"
//! end = "2020-12-31"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use volrisk_core::dcc::JointFamily;
use volrisk_core::distributions::DistFamily;
use volrisk_core::egarch::MeanSpec;
use volrisk_core::risk::{Period, RiskSpec};
use volrisk_core::stats::Significance;

use crate::ingest::{is_url, ColumnMap};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub symbol: String,
    pub source: String,
    #[serde(default)]
    pub columns: ColumnMap,
    /// Overrides `model.mean` for this asset.
    #[serde(default)]
    pub mean: Option<MeanSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodConfig {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    #[default]
    Egarch,
    Garch11,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variance: VarianceModel,
    pub distribution: DistFamily,
    pub joint: JointFamily,
    pub mean: MeanSpec,
    /// Iteration cap per optimizer pass; the optimizer's own default when
    /// absent.
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub significance: Significance,
}

/// Parameters of the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub assets: usize,
    pub n: usize,
    pub burn: usize,
    pub start: NaiveDate,
    pub alpha: f64,
    pub beta: f64,
    pub shape: f64,
    /// Common off-diagonal of the target correlation matrix.
    pub rho: f64,
    pub omega: f64,
    pub a_mag: f64,
    pub xi: f64,
    pub b_pers: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            assets: 3,
            n: 1000,
            burn: 500,
            start: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            alpha: 0.05,
            beta: 0.90,
            shape: 8.0,
            rho: 0.5,
            omega: -0.45,
            a_mag: 0.12,
            xi: -0.06,
            b_pers: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub assets: Vec<AssetConfig>,
    pub periods: Vec<PeriodConfig>,
    pub model: ModelConfig,
    pub levels: Vec<f64>,
    pub portfolio_amount: f64,
    /// Per-period risk-free rate for Sharpe ratios.
    pub risk_free_rate: Option<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub tests: TestConfig,
    pub simulate: SimulateConfig,
    /// Include full `Q_t`/`R_t` paths in the joint fit JSON.
    pub export_paths: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            assets: Vec::new(),
            periods: Vec::new(),
            model: ModelConfig::default(),
            levels: vec![0.90, 0.95, 0.99],
            portfolio_amount: 1.0,
            risk_free_rate: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            tests: TestConfig::default(),
            simulate: SimulateConfig::default(),
            export_paths: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` and resolves relative asset sources and the output
    /// directory against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), source: e })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for a in &mut cfg.assets {
            if !is_url(&a.source) && Path::new(&a.source).is_relative() {
                a.source = base.join(&a.source).to_string_lossy().into_owned();
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Checks that need no data. `need_assets` is false for `simulate`.
    pub fn validate(&self, need_assets: bool) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if need_assets && self.assets.is_empty() {
            return bad("at least one asset is required".into());
        }
        let mut seen = HashSet::new();
        for a in &self.assets {
            if a.symbol.trim().is_empty() {
                return bad("empty asset symbol".into());
            }
            if !seen.insert(a.symbol.as_str()) {
                return bad(format!("duplicate symbol `{}`", a.symbol));
            }
            let m = a.mean.unwrap_or(self.model.mean);
            if let Err(e) = MeanSpec::new(m.ar, m.ma, m.constant) {
                return bad(format!("{}: {e}", a.symbol));
            }
        }
        let mut names = HashSet::new();
        for p in &self.periods {
            if !names.insert(p.name.as_str()) {
                return bad(format!("duplicate period `{}`", p.name));
            }
            if p.start > p.end {
                return bad(format!("period `{}` ends before it starts", p.name));
            }
        }
        if self.levels.is_empty() {
            return bad("no confidence levels".into());
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return bad(format!("level {l} outside (0, 1)"));
        }
        if !(self.portfolio_amount > 0.0 && self.portfolio_amount.is_finite()) {
            return bad(format!("portfolio_amount must be positive, got {}", self.portfolio_amount));
        }
        if let Err(e) = MeanSpec::new(self.model.mean.ar, self.model.mean.ma, self.model.mean.constant) {
            return bad(e.to_string());
        }
        let s = &self.simulate;
        if s.assets < 1 || s.n < 20 {
            return bad("simulate needs at least one asset and 20 observations".into());
        }
        if !(s.alpha >= 0.0 && s.beta >= 0.0 && s.alpha + s.beta < 1.0 && s.shape > 2.0 && s.b_pers.abs() < 1.0) {
            return bad("simulate parameters outside the admissible region".into());
        }
        if !(s.rho > -1.0 / (s.assets.max(2) - 1) as f64 && s.rho < 1.0) {
            return bad(format!("simulate.rho = {} does not give a positive definite target", s.rho));
        }
        Ok(())
    }

    pub fn mean_for(&self, asset: &AssetConfig) -> MeanSpec {
        asset.mean.unwrap_or(self.model.mean)
    }

    pub fn risk_spec(&self) -> RiskSpec {
        let periods = self
            .periods
            .iter()
            .map(|p| Period { name: p.name.clone(), start: p.start, end: p.end })
            .collect();
        RiskSpec { levels: self.levels.clone(), amount: self.portfolio_amount, periods }
    }
}

/// `"0.90,0.95"` into levels.
pub fn parse_levels(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| ConfigError::Invalid(format!("bad level `{p}`"))))
        .collect()
}
