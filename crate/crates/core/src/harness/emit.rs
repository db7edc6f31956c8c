use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OutputFormat, RunRecord};
use crate::error::{Error, Result};

/// One output row; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub t: usize,
    pub user: usize,
    /// Item ids joined by `;`.
    pub slate: String,
    pub choice: usize,
    pub value_policy: f64,
    pub value_reference: f64,
    pub regret_cum: f64,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "seed",
    "t",
    "user",
    "slate",
    "choice",
    "value_policy",
    "value_reference",
    "regret_cum",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub seed: u64,
    pub item: usize,
    pub selections: u64,
    pub presented: u64,
    pub reference_selections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RunSummary<'a> {
    seed: u64,
    ranker: String,
    steps: usize,
    final_regret: f64,
    meta: &'a super::RunMeta,
}

/// Files written by [`emit_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub runs: PathBuf,
    pub items: PathBuf,
    pub summary: PathBuf,
    pub trace: Option<PathBuf>,
}

pub fn result_rows(records: &[RunRecord]) -> impl Iterator<Item = ResultRow> + '_ {
    records.iter().flat_map(|r| {
        r.rows.iter().map(move |row| ResultRow {
            seed: r.seed,
            t: row.t,
            user: row.user.0,
            slate: row.slate.joined(),
            choice: row.choice,
            value_policy: row.value_policy,
            value_reference: row.value_reference,
            regret_cum: row.regret_cum,
        })
    })
}

/// Writes per-step rows (`runs.csv` or `runs.jsonl`), per-item counts
/// (`items.csv`), run metadata (`summary.json`) and, when recorded, the
/// estimator trace (`trace.jsonl`) into `dir`.
pub fn emit_results(records: &[RunRecord], format: OutputFormat, dir: &Path) -> Result<EmittedFiles> {
    if records.is_empty() {
        return Err(Error::invalid("no run records to emit"));
    }
    std::fs::create_dir_all(dir)?;
    let runs = match format {
        OutputFormat::Csv => {
            let path = dir.join("runs.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for row in result_rows(records) {
                w.serialize(row)?;
            }
            w.flush()?;
            path
        }
        OutputFormat::Jsonl => {
            let path = dir.join("runs.jsonl");
            let mut w = BufWriter::new(File::create(&path)?);
            for row in result_rows(records) {
                serde_json::to_writer(&mut w, &row)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            path
        }
    };

    let items = dir.join("items.csv");
    let mut w = csv::Writer::from_path(&items)?;
    for r in records {
        for item in 0..r.corpus_size {
            w.serialize(ItemRow {
                seed: r.seed,
                item,
                selections: r.selections[item],
                presented: r.presented[item],
                reference_selections: r.reference_selections[item],
            })?;
        }
    }
    w.flush()?;

    let summary = dir.join("summary.json");
    let summaries: Vec<RunSummary> = records
        .iter()
        .map(|r| RunSummary {
            seed: r.seed,
            ranker: r.ranker.to_string(),
            steps: r.rows.len(),
            final_regret: r.final_regret(),
            meta: &r.meta,
        })
        .collect();
    std::fs::write(&summary, serde_json::to_string_pretty(&summaries)?)?;

    let trace = if records.iter().any(|r| !r.trace.is_empty()) {
        let path = dir.join("trace.jsonl");
        let mut w = BufWriter::new(File::create(&path)?);
        for r in records {
            for row in &r.trace {
                serde_json::to_writer(&mut w, &serde_json::json!({ "seed": r.seed, "row": row }))?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
        Some(path)
    } else {
        None
    };
    Ok(EmittedFiles {
        runs,
        items,
        summary,
        trace,
    })
}

/// Reads back a `runs.csv`.
pub fn read_result_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::invalid(format!("unexpected columns {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Reads back a `runs.jsonl`.
pub fn read_result_jsonl(path: &Path) -> Result<Vec<ResultRow>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{RunMeta, StepRow};
    use crate::rankers::RankerKind;
    use crate::slate::{Slate, UserId};

    fn handmade() -> RunRecord {
        let rows = (1..=3)
            .map(|t| StepRow {
                t,
                user: UserId(t % 2),
                slate: Slate::from_indices_unchecked(&[t, 0]),
                choice: t % 3,
                value_policy: 0.1 * t as f64 + 1.0 / 3.0,
                value_reference: 0.7,
                regret_cum: 0.3 * t as f64,
            })
            .collect();
        RunRecord {
            seed: 9,
            ranker: RankerKind::Greedy,
            corpus_size: 4,
            rows,
            selections: vec![1, 0, 1, 0],
            presented: vec![3, 1, 1, 1],
            reference_selections: vec![0, 2, 0, 0],
            meta: RunMeta {
                profile: None,
                bonus_scale: 1.0,
                rho_min: None,
                tau: None,
                lambda: None,
                admitted: 0,
                refits: 0,
                estimator_errors: vec![],
            },
            trace: vec![],
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = handmade();
        let files = emit_results(std::slice::from_ref(&rec), OutputFormat::Csv, dir.path()).unwrap();
        let text = std::fs::read_to_string(&files.runs).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("seed,t,user,slate,choice,value_policy,value_reference,regret_cum\n"));
        let back = read_result_csv(&files.runs).unwrap();
        assert_eq!(back, result_rows(std::slice::from_ref(&rec)).collect::<Vec<_>>());
        let items = std::fs::read_to_string(&files.items).unwrap();
        assert_eq!(items.lines().count(), 1 + 4);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = handmade();
        let files = emit_results(std::slice::from_ref(&rec), OutputFormat::Jsonl, dir.path()).unwrap();
        let back = read_result_jsonl(&files.runs).unwrap();
        assert_eq!(back, result_rows(std::slice::from_ref(&rec)).collect::<Vec<_>>());
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(emit_results(&[], OutputFormat::Csv, &out).is_err());
        assert!(!out.exists());
    }
}
