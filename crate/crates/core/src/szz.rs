//! Blame-based candidate generation, the issue and one-commit filters, and
//! the single-candidate selectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::git::{CommitId, RepositoryHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub commit: CommitId,
    pub commit_time: i64,
    /// Blamed lines of this fix attributed to the candidate.
    pub touched_line_count: usize,
}

/// Candidates for one fix commit, kept sorted by commit id with no
/// duplicates and never containing the fix itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub fc: CommitId,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(fc: CommitId, candidates: impl IntoIterator<Item = Candidate>) -> Self {
        let mut by_id: BTreeMap<CommitId, Candidate> = BTreeMap::new();
        for c in candidates {
            if c.commit == fc {
                continue;
            }
            by_id
                .entry(c.commit)
                .and_modify(|e| e.touched_line_count += c.touched_line_count)
                .or_insert(c);
        }
        Self {
            fc,
            candidates: by_id.into_values().collect(),
        }
    }

    pub fn empty(fc: CommitId) -> Self {
        Self {
            fc,
            candidates: Vec::new(),
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<CommitId> {
        self.candidates.iter().map(|c| c.commit).collect()
    }

    pub fn contains(&self, id: CommitId) -> bool {
        self.candidates.binary_search_by(|c| c.commit.cmp(&id)).is_ok()
    }

    /// Ids newest first, ties by ascending id.
    pub fn newest_first(&self) -> Vec<CommitId> {
        let mut v = self.candidates.clone();
        v.sort_by(|a, b| b.commit_time.cmp(&a.commit_time).then_with(|| a.commit.cmp(&b.commit)));
        v.into_iter().map(|c| c.commit).collect()
    }

    fn retain(mut self, keep: impl Fn(&Candidate) -> bool) -> Self {
        self.candidates.retain(|c| keep(c));
        self
    }
}

/// B-SZZ: blame every line the fix removed or modified at the fix's parent
/// and collect the originating commits. Pure insertions contribute nothing.
pub fn bszz_candidates(repo: &RepositoryHandle, fc: CommitId) -> Result<CandidateSet> {
    let meta = repo.commit_meta(fc)?;
    let Some(parent) = meta.first_parent() else {
        return Ok(CandidateSet::empty(fc));
    };
    let mut counts: BTreeMap<CommitId, usize> = BTreeMap::new();
    for diff in repo.diff_commit(fc)? {
        if diff.binary {
            continue;
        }
        let Some(old_path) = diff.old_path.as_deref() else {
            continue;
        };
        let lines = diff.removed_lines();
        if lines.is_empty() {
            continue;
        }
        for attribution in repo.blame_lines(parent, old_path, &lines)? {
            *counts.entry(attribution.origin).or_default() += 1;
        }
    }
    let candidates = counts
        .into_iter()
        .map(|(commit, touched_line_count)| {
            Ok(Candidate {
                commit,
                commit_time: repo.commit_meta(commit)?.commit_time,
                touched_line_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet::new(fc, candidates))
}

/// Drops candidates committed at or after the issue report.
pub fn apply_issue_filter(candidates: CandidateSet, issue_date: i64) -> CandidateSet {
    candidates.retain(|c| c.commit_time < issue_date)
}

/// The newest candidate strictly before the issue report.
pub fn apply_one_commit_filter(candidates: &CandidateSet, issue_date: i64) -> Option<CommitId> {
    newest(candidates.candidates.iter().filter(|c| c.commit_time < issue_date))
}

/// Newest candidate overall (R-SZZ style).
pub fn select_latest(candidates: &CandidateSet) -> Option<CommitId> {
    newest(candidates.candidates.iter())
}

/// Candidate with the most blamed lines (L-SZZ style); ties go to the newer
/// commit, then the smaller id.
pub fn select_largest(candidates: &CandidateSet) -> Option<CommitId> {
    candidates
        .candidates
        .iter()
        .max_by(|a, b| {
            a.touched_line_count
                .cmp(&b.touched_line_count)
                .then_with(|| a.commit_time.cmp(&b.commit_time))
                .then_with(|| b.commit.cmp(&a.commit))
        })
        .map(|c| c.commit)
}

fn newest<'a>(it: impl Iterator<Item = &'a Candidate>) -> Option<CommitId> {
    it.max_by(|a, b| a.commit_time.cmp(&b.commit_time).then_with(|| b.commit.cmp(&a.commit)))
        .map(|c| c.commit)
}

/// How the fallback path turns a candidate set into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackSelector {
    /// Every candidate.
    #[default]
    B,
    BLatest,
    BLargest,
}

impl FallbackSelector {
    pub fn select(self, candidates: &CandidateSet) -> Vec<CommitId> {
        match self {
            FallbackSelector::B => candidates.newest_first(),
            FallbackSelector::BLatest => select_latest(candidates).into_iter().collect(),
            FallbackSelector::BLargest => select_largest(candidates).into_iter().collect(),
        }
    }
}

impl fmt::Display for FallbackSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackSelector::B => "b",
            FallbackSelector::BLatest => "b-latest",
            FallbackSelector::BLargest => "b-largest",
        })
    }
}

impl FromStr for FallbackSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" => Ok(FallbackSelector::B),
            "b-latest" | "b+latest" => Ok(FallbackSelector::BLatest),
            "b-largest" | "b+largest" => Ok(FallbackSelector::BLargest),
            _ => Err(Error::Format {
                what: "fallback selector",
                message: format!("{s} (expected b, b-latest or b-largest)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterConfig {
    pub issue_filter_enabled: bool,
    pub one_commit_filter_enabled: bool,
    pub issue_date: Option<i64>,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if (self.issue_filter_enabled || self.one_commit_filter_enabled) && self.issue_date.is_none() {
            return Err(Error::MissingIssueDate);
        }
        Ok(())
    }

    /// Issue filter, then one-commit filter, then `selector`.
    pub fn run(&self, candidates: CandidateSet, selector: FallbackSelector) -> Result<Vec<CommitId>> {
        self.validate()?;
        let mut set = candidates;
        if let (true, Some(date)) = (self.issue_filter_enabled, self.issue_date) {
            set = apply_issue_filter(set, date);
        }
        if let (true, Some(date)) = (self.one_commit_filter_enabled, self.issue_date) {
            let kept = apply_one_commit_filter(&set, date);
            set = set.retain(|c| Some(c.commit) == kept);
        }
        Ok(selector.select(&set))
    }
}

/// Produces candidate sets for fix commits.
pub trait CandidateSource: Send + Sync {
    fn candidates(&self, repo: &RepositoryHandle, fc: CommitId) -> Result<CandidateSet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BlameCandidates;

impl CandidateSource for BlameCandidates {
    fn candidates(&self, repo: &RepositoryHandle, fc: CommitId) -> Result<CandidateSet> {
        bszz_candidates(repo, fc)
    }
}

/// Candidate sets produced elsewhere, loaded from the candidate CSV form.
/// Fix commits absent from the file have no candidates.
#[derive(Debug, Clone, Default)]
pub struct ExternalCandidates {
    by_fc: BTreeMap<CommitId, CandidateSet>,
}

impl ExternalCandidates {
    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(Self {
            by_fc: read_candidates_csv(text)?,
        })
    }

    pub fn get(&self, fc: CommitId) -> CandidateSet {
        self.by_fc.get(&fc).cloned().unwrap_or_else(|| CandidateSet::empty(fc))
    }
}

impl CandidateSource for ExternalCandidates {
    fn candidates(&self, _repo: &RepositoryHandle, fc: CommitId) -> Result<CandidateSet> {
        Ok(self.get(fc))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CandidateRow {
    fc: CommitId,
    candidate: CommitId,
    commit_time: i64,
    touched_line_count: usize,
}

/// `fc,candidate,commit_time,touched_line_count`, one row per candidate.
pub fn write_candidates_csv<'a>(sets: impl IntoIterator<Item = &'a CandidateSet>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["fc", "candidate", "commit_time", "touched_line_count"])?;
    for set in sets {
        for c in &set.candidates {
            w.serialize(CandidateRow {
                fc: set.fc,
                candidate: c.commit,
                commit_time: c.commit_time,
                touched_line_count: c.touched_line_count,
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Format {
        what: "candidate csv",
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_candidates_csv(text: &str) -> Result<BTreeMap<CommitId, CandidateSet>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut grouped: BTreeMap<CommitId, Vec<Candidate>> = BTreeMap::new();
    for row in r.deserialize::<CandidateRow>() {
        let row = row?;
        grouped.entry(row.fc).or_default().push(Candidate {
            commit: row.candidate,
            commit_time: row.commit_time,
            touched_line_count: row.touched_line_count,
        });
    }
    Ok(grouped
        .into_iter()
        .map(|(fc, cs)| (fc, CandidateSet::new(fc, cs)))
        .collect())
}
