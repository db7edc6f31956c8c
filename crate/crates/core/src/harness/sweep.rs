use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, RunRecord};
use crate::error::{Error, Result};

/// Steps averaged for the final-window regret.
pub const SWEEP_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "M")]
    SlateSize,
    /// Both `d_q` and `d_p`.
    #[serde(rename = "d")]
    Dim,
    #[serde(rename = "alpha_min")]
    AlphaMin,
    #[serde(rename = "b_max")]
    BMax,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::SlateSize => "M",
            SweepParam::Dim => "d",
            SweepParam::AlphaMin => "alpha_min",
            SweepParam::BMax => "b_max",
        }
    }

    /// The base config with this parameter set to `value`.
    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let as_count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!("{} must be a positive integer, got {value}", self.as_str())))
            }
        };
        match self {
            SweepParam::SlateSize => {
                cfg.generator.slate_size = as_count()?;
                cfg.generator.rank_bias = None;
            }
            SweepParam::Dim => {
                let d = as_count()?;
                cfg.generator.quality_dim = d;
                cfg.generator.popularity_dim = d;
            }
            SweepParam::AlphaMin => cfg.generator.alpha_min = value,
            SweepParam::BMax => cfg.generator.b_max = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" | "slate_size" => Ok(SweepParam::SlateSize),
            "d" | "dim" => Ok(SweepParam::Dim),
            "alpha_min" => Ok(SweepParam::AlphaMin),
            "b_max" => Ok(SweepParam::BMax),
            other => Err(Error::config(format!(
                "unknown sweep parameter {other:?}, expected M, d, alpha_min or b_max"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub seeds: usize,
    /// Mean over seeds of the cumulative regret averaged over the last window.
    pub final_window_regret: f64,
    pub final_window_se: f64,
    /// Same statistic over the first window.
    pub early_window_regret: f64,
    pub final_regret: f64,
}

pub fn summarize(param: SweepParam, value: f64, records: &[RunRecord]) -> SweepRow {
    let k = records.len() as f64;
    let finals: Vec<f64> = records.iter().map(|r| r.final_window_regret(SWEEP_WINDOW)).collect();
    let mean = finals.iter().sum::<f64>() / k;
    let var = finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let early = records
        .iter()
        .map(|r| {
            let n = SWEEP_WINDOW.min(r.rows.len()).max(1);
            r.rows[..n].iter().map(|x| x.regret_cum).sum::<f64>() / n as f64
        })
        .sum::<f64>()
        / k;
    SweepRow {
        param: param.to_string(),
        value,
        seeds: records.len(),
        final_window_regret: mean,
        final_window_se: (var / k).sqrt(),
        early_window_regret: early,
        final_regret: records.iter().map(RunRecord::final_regret).sum::<f64>() / k,
    }
}

/// Runs the base experiment once per value of `param`, all else fixed.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            let cfg = param.apply(base, v)?;
            let records = run_experiment(&cfg)?;
            Ok(summarize(param, v, &records))
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &std::path::Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_sets_parameters() {
        let base = ExperimentConfig::default();
        let c = SweepParam::SlateSize.apply(&base, 2.0).unwrap();
        assert_eq!(c.generator.slate_size, 2);
        let c = SweepParam::Dim.apply(&base, 4.0).unwrap();
        assert_eq!((c.generator.quality_dim, c.generator.popularity_dim), (4, 4));
        assert!(SweepParam::SlateSize.apply(&base, 2.5).is_err());
        assert!(SweepParam::BMax.apply(&base, 1.5).is_err());
        assert_eq!("b_max".parse::<SweepParam>().unwrap(), SweepParam::BMax);
        assert!("T".parse::<SweepParam>().is_err());
    }
}
