//! Datasets of fix commits with known bug-inducing commits, issue-date
//! simulation, scoring and factor sweeps.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::git::{is_remote, CommitId, RepositoryHandle};
use crate::predict::{run_dataset, DatasetRun, Predictor, RecordOutcome, RunOptions};
use crate::workitem::Factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueDateKind {
    #[default]
    Real,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixRecord {
    pub id: String,
    /// Remote URL or local path (already resolved against the dataset file).
    pub repo: String,
    pub fc: CommitId,
    pub oracle_bics: BTreeSet<CommitId>,
    pub issue_date: Option<i64>,
    pub issue_date_kind: IssueDateKind,
    pub language: Option<String>,
}

/// Seconds since the epoch, or an RFC 3339 timestamp.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawDate {
    Seconds(i64),
    Text(String),
}

fn parse_date(raw: RawDate) -> std::result::Result<i64, String> {
    match raw {
        RawDate::Seconds(s) => Ok(s),
        RawDate::Text(t) => chrono::DateTime::parse_from_rfc3339(&t)
            .map(|d| d.timestamp())
            .map_err(|e| format!("issue_date {t:?}: {e}")),
    }
}

/// Parses whole seconds since the epoch or an RFC 3339 timestamp.
pub fn parse_timestamp(text: &str) -> Result<i64> {
    let text = text.trim();
    if let Ok(seconds) = text.parse::<i64>() {
        return Ok(seconds);
    }
    parse_date(RawDate::Text(text.to_string())).map_err(|message| Error::Format {
        what: "timestamp",
        message,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    repo: String,
    fix_commit_hash: String,
    bug_commit_hashes: Vec<String>,
    #[serde(default)]
    issue_date: Option<RawDate>,
    #[serde(default)]
    issue_date_kind: Option<IssueDateKind>,
    #[serde(default)]
    language: Option<String>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    repo: &'a str,
    fix_commit_hash: CommitId,
    bug_commit_hashes: &'a BTreeSet<CommitId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    issue_date: Option<i64>,
    issue_date_kind: IssueDateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// Position in the dataset array.
    pub index: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<FixRecord>,
    pub errors: Vec<RecordError>,
    pub excluded: usize,
}

fn validate(raw: RawRecord, base: Option<&Path>) -> std::result::Result<FixRecord, String> {
    if raw.id.trim().is_empty() {
        return Err("empty id".into());
    }
    let fc: CommitId = raw
        .fix_commit_hash
        .parse()
        .map_err(|_| format!("fix_commit_hash {:?} is not a 40-character hex id", raw.fix_commit_hash))?;
    if raw.bug_commit_hashes.is_empty() {
        return Err("bug_commit_hashes is empty".into());
    }
    let oracle_bics = raw
        .bug_commit_hashes
        .iter()
        .map(|h| {
            h.parse::<CommitId>()
                .map_err(|_| format!("bug commit hash {h:?} is not a 40-character hex id"))
        })
        .collect::<std::result::Result<BTreeSet<_>, _>>()?;
    let issue_date = raw.issue_date.map(parse_date).transpose()?;
    let issue_date_kind = raw.issue_date_kind.unwrap_or_default();
    if issue_date_kind == IssueDateKind::Simulated && issue_date.is_none() {
        return Err("issue_date_kind is simulated but issue_date is missing".into());
    }
    let repo = match base {
        Some(dir) if !is_remote(&raw.repo) && Path::new(&raw.repo).is_relative() => {
            dir.join(&raw.repo).to_string_lossy().into_owned()
        }
        _ => raw.repo,
    };
    Ok(FixRecord {
        id: raw.id,
        repo,
        fc,
        oracle_bics,
        issue_date,
        issue_date_kind,
        language: raw.language,
    })
}

/// Parses dataset JSON. Relative local repository paths are resolved against
/// `base`. Invalid records are reported individually, not fatally.
pub fn parse_dataset(text: &str, base: Option<&Path>) -> Result<Dataset> {
    let values: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (index, value) in values.into_iter().enumerate() {
        let id = value.get("id").and_then(|v| v.as_str()).map(str::to_string);
        let result = serde_json::from_value::<RawRecord>(value)
            .map_err(|e| e.to_string())
            .and_then(|raw| validate(raw, base))
            .and_then(|r| {
                if seen.insert(r.id.clone()) {
                    Ok(r)
                } else {
                    Err(format!("duplicate id {}", r.id))
                }
            });
        match result {
            Ok(r) => records.push(r),
            Err(message) => errors.push(RecordError { index, id, message }),
        }
    }
    Ok(Dataset {
        records,
        errors,
        excluded: 0,
    })
}

/// Newline-separated ids; blank lines and `#` comments are ignored.
pub fn parse_exclusions(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_dataset(path: &Path, exclusions: Option<&Path>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p });
    let mut dataset = parse_dataset(&text, base)?;
    if let Some(ex) = exclusions {
        let text = std::fs::read_to_string(ex).map_err(|e| Error::io(ex, e))?;
        let ids = parse_exclusions(&text);
        let before = dataset.records.len();
        dataset.records.retain(|r| !ids.contains(&r.id));
        dataset.excluded = before - dataset.records.len();
    }
    Ok(dataset)
}

pub fn dataset_to_json(records: &[FixRecord]) -> Result<String> {
    let out: Vec<RecordOut<'_>> = records
        .iter()
        .map(|r| RecordOut {
            id: &r.id,
            repo: &r.repo,
            fix_commit_hash: r.fc,
            bug_commit_hashes: &r.oracle_bics,
            issue_date: r.issue_date,
            issue_date_kind: r.issue_date_kind,
            language: r.language.as_deref(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

pub fn write_dataset(path: &Path, records: &[FixRecord]) -> Result<()> {
    std::fs::write(path, dataset_to_json(records)?).map_err(|e| Error::io(path, e))
}

/// Where in the BIC→fix interval a missing issue date is placed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum OffsetMode {
    /// Median observed offset, 0.93.
    #[default]
    Q2,
    /// Sixty seconds after the BIC.
    Legacy,
    Custom(f64),
}

impl OffsetMode {
    pub const Q2_OFFSET: f64 = 0.93;
    pub const LEGACY_SECONDS: i64 = 60;

    pub fn validate(self) -> Result<Self> {
        match self {
            OffsetMode::Custom(v) if !(0.0..=1.0).contains(&v) => Err(Error::InvalidOffset(v)),
            m => Ok(m),
        }
    }
}

impl fmt::Display for OffsetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetMode::Q2 => f.write_str("q2"),
            OffsetMode::Legacy => f.write_str("legacy"),
            OffsetMode::Custom(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for OffsetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "q2" => Ok(OffsetMode::Q2),
            "legacy" => Ok(OffsetMode::Legacy),
            other => {
                let v: f64 = other.parse().map_err(|_| Error::Format {
                    what: "offset",
                    message: format!("{s} (expected q2, legacy or a number in [0, 1])"),
                })?;
                OffsetMode::Custom(v).validate()
            }
        }
    }
}

impl Serialize for OffsetMode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OffsetMode::Custom(v) => serializer.serialize_f64(*v),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for OffsetMode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => OffsetMode::Custom(v).validate(),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// `bic_time + offset × (fc_time − bic_time)`, rounded to whole seconds.
pub fn simulate_issue_date(bic_time: i64, fc_time: i64, mode: OffsetMode) -> Result<i64> {
    if bic_time > fc_time {
        return Err(Error::BicAfterFix { bic_time, fc_time });
    }
    let offset = match mode.validate()? {
        OffsetMode::Legacy => return Ok(bic_time + OffsetMode::LEGACY_SECONDS),
        OffsetMode::Q2 => OffsetMode::Q2_OFFSET,
        OffsetMode::Custom(v) => v,
    };
    let span = (fc_time - bic_time) as f64;
    let shift = (offset * span).round() as i64;
    Ok((bic_time + shift).clamp(bic_time, fc_time))
}

/// The record's issue date, or one simulated from its earliest oracle BIC.
pub fn resolve_issue_date(repo: &RepositoryHandle, record: &FixRecord, mode: OffsetMode) -> Result<(i64, IssueDateKind)> {
    if let Some(date) = record.issue_date {
        return Ok((date, record.issue_date_kind));
    }
    let fc_time = repo.commit_meta(record.fc)?.commit_time;
    let bic_time = record
        .oracle_bics
        .iter()
        .map(|&b| repo.commit_meta(b).map(|m| m.commit_time))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .ok_or(Error::MissingIssueDate)?;
    Ok((simulate_issue_date(bic_time, fc_time, mode)?, IssueDateKind::Simulated))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// True positives over all oracle BICs.
    #[default]
    OracleBics,
    /// Records with at least one true positive over all records.
    Records,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub oracle_bics: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// No candidates were predicted at all; precision is reported as 0.
    pub precision_undefined: bool,
    pub recall_mode: RecallMode,
}

impl MetricsSummary {
    pub fn from_counts(n: usize, tp: usize, fp: usize, oracle_bics: usize, hit_records: usize, mode: RecallMode) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = match mode {
            RecallMode::OracleBics => ratio(tp, oracle_bics),
            RecallMode::Records => ratio(hit_records, n),
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            n,
            tp,
            fp,
            oracle_bics,
            recall,
            precision,
            f1,
            precision_undefined: tp + fp == 0,
            recall_mode: mode,
        }
    }
}

/// Scores predicted candidates (keyed by record id) against the oracle.
/// Every oracle record needs exactly one entry; failed records pass an
/// empty candidate list.
pub fn score(predictions: &[(String, Vec<CommitId>)], oracle: &[FixRecord], mode: RecallMode) -> Result<MetricsSummary> {
    let by_id: BTreeMap<&str, &FixRecord> = oracle.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut seen = BTreeSet::new();
    let (mut tp, mut fp, mut hit_records) = (0, 0, 0);
    for (id, candidates) in predictions {
        let record = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("prediction {id} has no oracle record")))?;
        if !seen.insert(id.as_str()) {
            return Err(Error::IdMismatch(format!("duplicate prediction for {id}")));
        }
        let hits = candidates.iter().filter(|c| record.oracle_bics.contains(c)).count();
        tp += hits;
        fp += candidates.len() - hits;
        if hits > 0 {
            hit_records += 1;
        }
    }
    if let Some(missing) = by_id.keys().find(|id| !seen.contains(*id)) {
        return Err(Error::IdMismatch(format!("no prediction for oracle record {missing}")));
    }
    let oracle_bics = oracle.iter().map(|r| r.oracle_bics.len()).sum();
    Ok(MetricsSummary::from_counts(oracle.len(), tp, fp, oracle_bics, hit_records, mode))
}

/// Candidate lists from a run, with failed records contributing none.
pub fn predicted_candidates(outcomes: &[RecordOutcome]) -> Vec<(String, Vec<CommitId>)> {
    outcomes
        .iter()
        .map(|o| {
            let candidates = o.prediction.as_ref().map(|p| p.candidates.clone()).unwrap_or_default();
            (o.id.clone(), candidates)
        })
        .collect()
}

pub fn score_run(run: &DatasetRun, oracle: &[FixRecord], mode: RecallMode) -> Result<MetricsSummary> {
    score(&predicted_candidates(&run.outcomes), oracle, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: Factor,
    pub fcs_with_workitems: usize,
    pub total_workitems: usize,
    pub tp: usize,
    pub fp: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

/// One run per factor. The predictor's change-set cache is shared, so only
/// the first factor pays for method extraction.
pub fn factor_sweep(
    predictor: &Predictor,
    records: &[FixRecord],
    factors: &[Factor],
    options: &RunOptions,
    mode: RecallMode,
) -> Result<Vec<(SweepRow, DatasetRun)>> {
    if factors.is_empty() {
        return Err(Error::InvalidFactor("empty factor list".into()));
    }
    factors
        .iter()
        .map(|&factor| {
            let mut config = predictor.config().clone();
            config.factor = factor;
            let run = run_dataset(&predictor.reconfigured(config), records, options)?;
            let m = score_run(&run, records, mode)?;
            let row = SweepRow {
                factor,
                fcs_with_workitems: run.summary.work_item_path,
                total_workitems: run.summary.total_work_items,
                tp: m.tp,
                fp: m.fp,
                recall: m.recall,
                precision: m.precision,
                f1: m.f1,
            };
            Ok((row, run))
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "factor",
        "fcs_with_workitems",
        "total_workitems",
        "tp",
        "fp",
        "recall",
        "precision",
        "f1",
    ])?;
    for r in rows {
        w.write_record([
            r.factor.to_string(),
            r.fcs_with_workitems.to_string(),
            r.total_workitems.to_string(),
            r.tp.to_string(),
            r.fp.to_string(),
            format!("{:.6}", r.recall),
            format!("{:.6}", r.precision),
            format!("{:.6}", r.f1),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format {
        what: "sweep csv",
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
