//! Result files.
//!
//! `results.csv` has one row per (SNR, algorithm, true scheme) with header
//! `snr_db,algorithm,scheme_true,trials,correct,accuracy`. Confusion
//! matrices go to `confusion/<algorithm>_snr<snr>.csv` with header
//! `scheme_true,scheme_decided,count`; failed estimations are listed under
//! the decided label `failed`. `summary.json` holds the whole
//! [`SweepResult`], configuration and master seed included.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::Algorithm;
use crate::harness::SweepResult;
use crate::modem::Scheme;
use crate::{Error, Result};

pub const RESULTS_CSV: &str = "results.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CONFUSION_DIR: &str = "confusion";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Result CSV, confusion CSVs and the JSON summary.
    Csv,
    /// JSON summary only.
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub scheme_true: Scheme,
    pub trials: u64,
    pub correct: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRow {
    pub scheme_true: Scheme,
    /// A scheme name, or `failed`.
    pub scheme_decided: String,
    pub count: u64,
}

pub fn result_rows(result: &SweepResult) -> Vec<ResultRow> {
    result
        .points
        .iter()
        .flat_map(|p| {
            p.schemes.iter().map(move |s| ResultRow {
                snr_db: p.snr_db,
                algorithm: p.algorithm,
                scheme_true: s.scheme,
                trials: s.trials,
                correct: s.correct,
                accuracy: s.accuracy,
            })
        })
        .collect()
}

fn csv_err(context: impl Into<String>) -> impl FnOnce(csv::Error) -> Error {
    let context = context.into();
    move |source| Error::Csv { context, source }
}

/// File name of the confusion matrix for one point, e.g. `proposed_snr-2.5.csv`.
pub fn confusion_file_name(algorithm: Algorithm, snr_db: f64) -> String {
    format!("{algorithm}_snr{snr_db}.csv")
}

/// Writes a sweep result into `dir` (created if needed).
pub fn emit_results(
    result: &SweepResult,
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();

    if format == OutputFormat::Csv {
        let path = dir.join(RESULTS_CSV);
        let mut w = csv::Writer::from_path(&path)
            .map_err(csv_err(format!("opening {}", path.display())))?;
        for row in result_rows(result) {
            w.serialize(&row)
                .map_err(csv_err(format!("writing {}", path.display())))?;
        }
        w.flush()
            .map_err(|e| Error::io(format!("flushing {}", path.display()), e))?;
        written.push(path);

        let cdir = dir.join(CONFUSION_DIR);
        fs::create_dir_all(&cdir)
            .map_err(|e| Error::io(format!("creating {}", cdir.display()), e))?;
        let cands = &result.config.candidates;
        for p in &result.points {
            let path = cdir.join(confusion_file_name(p.algorithm, p.snr_db));
            let mut w = csv::Writer::from_path(&path)
                .map_err(csv_err(format!("opening {}", path.display())))?;
            for (i, row) in p.confusion.iter().enumerate() {
                for (j, &count) in row.iter().enumerate() {
                    let decided = cands.get(j).map_or("failed".to_string(), |s| s.to_string());
                    w.serialize(ConfusionRow {
                        scheme_true: cands[i],
                        scheme_decided: decided,
                        count,
                    })
                    .map_err(csv_err(format!("writing {}", path.display())))?;
                }
            }
            w.flush()
                .map_err(|e| Error::io(format!("flushing {}", path.display()), e))?;
            written.push(path);
        }
    }

    let path = dir.join(SUMMARY_JSON);
    let text = serde_json::to_string_pretty(result).map_err(|e| Error::Json {
        context: "serializing sweep summary".into(),
        source: e,
    })?;
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    written.push(path);
    Ok(written)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r =
        csv::Reader::from_path(path).map_err(csv_err(format!("opening {}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err(format!("reading {}", path.display())))
}

pub fn read_confusion_csv(path: &Path) -> Result<Vec<ConfusionRow>> {
    let mut r =
        csv::Reader::from_path(path).map_err(csv_err(format!("opening {}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ConfusionRow>, _>>()
        .map_err(csv_err(format!("reading {}", path.display())))
}

pub fn read_summary(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("parsing {}", path.display()),
        source: e,
    })
}

/// `P_cc` per (algorithm, SNR) recomputed from result rows.
pub fn p_cc_from_rows(rows: &[ResultRow]) -> BTreeMap<(Algorithm, u64), f64> {
    let mut acc: BTreeMap<(Algorithm, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let slot = acc.entry((r.algorithm, r.snr_db.to_bits())).or_default();
        slot.0 += r.correct as f64 / r.trials as f64;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}
