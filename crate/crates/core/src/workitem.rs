//! Tracking matrices rooted at a fix commit, the work-item predicate, and
//! candidate selection among work items.
//!
//! Columns are the fix commit's modified methods; each row is one commit in
//! the mining window with a 1 wherever that commit touched the column's
//! method. A row is a work item when its 1-count reaches `factor × N`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::git::CommitId;
use crate::methods::{MethodChangeSet, MethodRef};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Work-item threshold in `(0, 1]`, held as an exact decimal fraction so
/// `factor × N` is compared without rounding.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    numerator: u64,
    denominator: u64,
}

impl Factor {
    /// Largest number of fractional digits kept.
    const MAX_DECIMALS: u32 = 12;

    /// Builds a factor from the shortest decimal that round-trips `value`
    /// (so `0.7` means exactly seven tenths).
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidFactor(value.to_string()));
        }
        format!("{value}").parse()
    }

    pub fn from_ratio(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 || numerator == 0 || numerator > denominator {
            return Err(Error::InvalidFactor(format!("{numerator}/{denominator}")));
        }
        let g = gcd(numerator, denominator);
        Ok(Self {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// `hits ≥ factor × n`, exactly.
    pub fn admits(&self, hits: usize, n: usize) -> bool {
        (hits as u128) * (self.denominator as u128) >= (self.numerator as u128) * (n as u128)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFactor(s.to_string());
        let s = s.trim();
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) {
            return Err(bad());
        }
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.len() > Self::MAX_DECIMALS as usize {
            return Err(bad());
        }
        let denominator = 10u64.pow(frac_part.len() as u32);
        let int_value: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        if int_value > 1 {
            return Err(bad());
        }
        let frac_value: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
        Self::from_ratio(int_value * denominator + frac_value, denominator).map_err(|_| bad())
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Factor({}/{})", self.numerator, self.denominator)
    }
}

impl Default for Factor {
    fn default() -> Self {
        Factor {
            numerator: 7,
            denominator: 10,
        }
    }
}

impl Serialize for Factor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Factor::new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub commit: CommitId,
    pub commit_time: i64,
    pub bits: Vec<bool>,
}

impl MatrixRow {
    pub fn hits(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackingMatrix {
    pub fc: CommitId,
    pub columns: Vec<MethodRef>,
    /// Newest first; ties on time are ordered by descending commit id.
    pub rows: Vec<MatrixRow>,
}

/// One history entry for [`build_tracking_matrix`]: a change set plus the
/// commit's committer time.
#[derive(Debug, Clone)]
pub struct TimedChangeSet<'a> {
    pub changes: &'a MethodChangeSet,
    pub commit_time: i64,
}

/// Builds the matrix whose columns are the fix commit's methods and whose
/// rows are the non-merge commits of `history`. Methods that the fix does
/// not touch are ignored.
pub fn build_tracking_matrix(
    fc_changes: &MethodChangeSet,
    history: &[TimedChangeSet<'_>],
) -> Result<TrackingMatrix> {
    if fc_changes.methods.is_empty() {
        return Err(Error::EmptyFixChangeSet);
    }
    let columns: Vec<MethodRef> = fc_changes.methods.iter().cloned().collect();
    let mut rows: Vec<MatrixRow> = history
        .iter()
        .filter(|h| !h.changes.is_merge)
        .map(|h| MatrixRow {
            commit: h.changes.commit,
            commit_time: h.commit_time,
            bits: columns.iter().map(|m| h.changes.methods.contains(m)).collect(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.commit_time
            .cmp(&a.commit_time)
            .then_with(|| b.commit.cmp(&a.commit))
    });
    rows.dedup_by(|a, b| a.commit == b.commit);
    Ok(TrackingMatrix {
        fc: fc_changes.commit,
        columns,
        rows,
    })
}

impl TrackingMatrix {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Writes the matrix as CSV: `commit,commit_time,<method>...` then one
    /// 0/1 row per commit.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["commit".to_string(), "commit_time".to_string()];
        header.extend(self.columns.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.commit.to_string(), row.commit_time.to_string()];
            record.extend(row.bits.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format {
            what: "matrix csv",
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parses [`TrackingMatrix::to_csv`] output. The fix commit is not part
    /// of the CSV and must be supplied.
    pub fn from_csv(fc: CommitId, text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format {
            what: "matrix csv",
            message: m,
        };
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "commit" || &header[1] != "commit_time" {
            return Err(bad("expected header commit,commit_time,<methods>".into()));
        }
        let columns = header
            .iter()
            .skip(2)
            .map(str::parse)
            .collect::<Result<Vec<MethodRef>>>()?;
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let commit: CommitId = record[0].parse()?;
            let commit_time: i64 = record[1].parse().map_err(|_| bad(format!("bad time {}", &record[1])))?;
            let bits = record
                .iter()
                .skip(2)
                .map(|c| match c {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(bad(format!("bad cell {other}"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(MatrixRow {
                commit,
                commit_time,
                bits,
            });
        }
        Ok(TrackingMatrix { fc, columns, rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// The work-item predicate for one row.
pub fn is_work_item(matrix: &TrackingMatrix, row_index: usize, factor: Factor) -> Result<bool> {
    let row = matrix.rows.get(row_index).ok_or(Error::RowOutOfRange {
        index: row_index,
        rows: matrix.rows.len(),
    })?;
    Ok(factor.admits(row.hits(), matrix.width()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItem {
    pub commit: CommitId,
    pub commit_time: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItemSet {
    pub fc: CommitId,
    pub factor: Factor,
    /// Newest first.
    pub items: Vec<WorkItem>,
}

impl WorkItemSet {
    /// Work items other than the fix commit itself.
    pub fn related(&self) -> impl Iterator<Item = &WorkItem> {
        self.items.iter().filter(move |w| w.commit != self.fc)
    }
}

pub fn detect_work_items(matrix: &TrackingMatrix, factor: Factor) -> WorkItemSet {
    let n = matrix.width();
    WorkItemSet {
        fc: matrix.fc,
        factor,
        items: matrix
            .rows
            .iter()
            .filter(|r| factor.admits(r.hits(), n))
            .map(|r| WorkItem {
                commit: r.commit,
                commit_time: r.commit_time,
            })
            .collect(),
    }
}

/// The newest work item strictly before `issue_date` and no older than
/// `lookback_days` before it. Equal times resolve to the smallest id.
pub fn select_bic_candidate(items: &WorkItemSet, issue_date: i64, lookback_days: u32) -> Option<CommitId> {
    let oldest = issue_date - i64::from(lookback_days) * SECONDS_PER_DAY;
    let chosen = items
        .items
        .iter()
        .filter(|w| w.commit_time < issue_date && w.commit_time >= oldest)
        .max_by(|a, b| a.commit_time.cmp(&b.commit_time).then_with(|| b.commit.cmp(&a.commit)))?;
    assert!(chosen.commit_time < issue_date);
    Some(chosen.commit)
}

/// Selection without an issue date: the first work item met walking back
/// from the fix, excluding the fix itself.
pub fn select_first_before_fix(items: &WorkItemSet) -> Option<CommitId> {
    items.related().next().map(|w| w.commit)
}
