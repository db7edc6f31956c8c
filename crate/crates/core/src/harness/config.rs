use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::GeneratorConfig;
use crate::error::{Error, Result};
use crate::estimator::QpConfig;
use crate::rankers::RankerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum EstimateKeyword {
    #[serde(rename = "estimate")]
    Estimate,
}

/// `ρ_min` given as a number or `"estimate"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RhoRepr", into = "RhoRepr")]
pub enum RhoSetting {
    Fixed(f64),
    Estimate,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum RhoRepr {
    Fixed(f64),
    Keyword(EstimateKeyword),
}

impl From<RhoRepr> for RhoSetting {
    fn from(r: RhoRepr) -> Self {
        match r {
            RhoRepr::Fixed(v) => RhoSetting::Fixed(v),
            RhoRepr::Keyword(_) => RhoSetting::Estimate,
        }
    }
}

impl From<RhoSetting> for RhoRepr {
    fn from(r: RhoSetting) -> Self {
        match r {
            RhoSetting::Fixed(v) => RhoRepr::Fixed(v),
            RhoSetting::Estimate => RhoRepr::Keyword(EstimateKeyword::Estimate),
        }
    }
}

impl Default for RhoSetting {
    fn default() -> Self {
        RhoSetting::Estimate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::config(format!("unknown format {other:?}, expected csv or jsonl"))),
        }
    }
}

/// One experiment: a world generator, a ranker and its parameters, a horizon
/// and the seeds to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Free-form label stored with the results.
    pub profile: Option<String>,
    pub generator: GeneratorConfig,
    pub ranker: RankerKind,
    pub qp: QpConfig,
    pub rho_min: RhoSetting,
    /// Slates sampled when estimating `ρ_min`.
    pub rho_sample_slates: usize,
    pub rho_tol: f64,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            profile: None,
            generator: GeneratorConfig::default(),
            ranker: RankerKind::Qp,
            qp: QpConfig::default(),
            rho_min: RhoSetting::Estimate,
            rho_sample_slates: 16,
            rho_tol: 1e-6,
            horizon: 10_000,
            seeds: (0..10).collect(),
            out_dir: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.qp.validate()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if let RhoSetting::Fixed(r) = self.rho_min {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::config(format!("rho_min must lie in [0, 1), got {r}")));
            }
        }
        if !(self.rho_tol > 0.0 && self.rho_tol < 1.0) {
            return Err(Error::config("rho_tol must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses `a..b` (end exclusive), `a..=b` or a single seed.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::config(format!("bad seed range {s:?}, expected a..b"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    Ok(vec![num(s)?])
}
