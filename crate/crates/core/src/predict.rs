//! Routing a fix commit through the work-item path or the fallback path,
//! singly or over a whole dataset.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{resolve_issue_date, FixRecord, IssueDateKind, OffsetMode};
use crate::git::{open_repository, CommitId, RepositoryHandle};
use crate::methods::MethodExtractor;
use crate::szz::{BlameCandidates, CandidateSource, FallbackSelector, FilterConfig};
use crate::workitem::{
    build_tracking_matrix, detect_work_items, select_bic_candidate, select_first_before_fix, Factor,
    TimedChangeSet, TrackingMatrix, SECONDS_PER_DAY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub factor: Factor,
    pub lookback_days: u32,
    pub fallback: FallbackSelector,
    pub issue_filter: bool,
    pub one_commit_filter: bool,
    pub max_commits: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            factor: Factor::default(),
            lookback_days: 30,
            fallback: FallbackSelector::B,
            issue_filter: true,
            one_commit_filter: false,
            max_commits: 10_000,
        }
    }
}

impl PredictConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Error::Format {
            what: "configuration",
            message: m.to_string(),
        };
        if self.lookback_days == 0 {
            return Err(bad("lookback_days must be positive"));
        }
        if self.max_commits == 0 {
            return Err(bad("max_commits must be positive"));
        }
        Ok(())
    }

    fn needs_issue_date(&self) -> bool {
        self.issue_filter || self.one_commit_filter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionPath {
    WorkItem,
    Fallback,
}

impl std::fmt::Display for PredictionPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictionPath::WorkItem => "work_item",
            PredictionPath::Fallback => "fallback",
        })
    }
}

/// Why a prediction took its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteReason {
    WorkItemFound,
    NoModifiedMethods,
    NoWorkItems,
    NoWorkItemBeforeIssue,
    IssueDateAfterFix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BicPrediction {
    pub fc: CommitId,
    pub path: PredictionPath,
    pub reason: RouteReason,
    pub candidates: Vec<CommitId>,
    /// Work items in the mined window, not counting the fix itself.
    pub work_item_count: usize,
    pub diagnostics: Vec<String>,
}

/// Runs predictions with a shared method extractor (and its change-set
/// cache) and a candidate source for the fallback path.
#[derive(Clone)]
pub struct Predictor {
    config: PredictConfig,
    extractor: MethodExtractor,
    source: Arc<dyn CandidateSource>,
}

impl std::fmt::Debug for Predictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Predictor").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Predictor {
    pub fn new(config: PredictConfig) -> Self {
        Self {
            config,
            extractor: MethodExtractor::default(),
            source: Arc::new(BlameCandidates),
        }
    }

    pub fn with_extractor(mut self, extractor: MethodExtractor) -> Self {
        self.extractor = extractor;
        self
    }

    pub fn with_source(mut self, source: Arc<dyn CandidateSource>) -> Self {
        self.source = source;
        self
    }

    /// Same extractor and source, different configuration.
    pub fn reconfigured(&self, config: PredictConfig) -> Self {
        Self {
            config,
            ..self.clone()
        }
    }

    pub fn config(&self) -> &PredictConfig {
        &self.config
    }

    pub fn extractor(&self) -> &MethodExtractor {
        &self.extractor
    }

    pub fn predict(&self, repo: &RepositoryHandle, fc: CommitId, issue_date: Option<i64>) -> Result<BicPrediction> {
        let config = &self.config;
        config.validate()?;
        if config.needs_issue_date() && issue_date.is_none() {
            return Err(Error::MissingIssueDate);
        }
        let fc_meta = repo.commit_meta(fc)?;
        let mut diagnostics = Vec::new();

        if let Some(date) = issue_date.filter(|&d| d > fc_meta.commit_time) {
            diagnostics.push(format!(
                "issue date {date} is after the fix commit time {}",
                fc_meta.commit_time
            ));
            return self.fallback(repo, fc, issue_date, RouteReason::IssueDateAfterFix, 0, diagnostics);
        }

        let fc_changes = self.extractor.modified_methods(repo, fc)?;
        diagnostics.extend(self.extraction_notes(fc));
        if fc_changes.methods.is_empty() {
            return self.fallback(repo, fc, issue_date, RouteReason::NoModifiedMethods, 0, diagnostics);
        }

        let oldest = match issue_date {
            Some(date) if config.issue_filter => date - i64::from(config.lookback_days) * SECONDS_PER_DAY,
            _ => i64::MIN,
        };
        let matrix = mine_tracking_matrix(repo, &self.extractor, fc, oldest, config.max_commits)?;
        let items = detect_work_items(&matrix, config.factor);
        let work_item_count = items.related().count();

        let selected = match issue_date {
            Some(date) if config.issue_filter => select_bic_candidate(&items, date, config.lookback_days),
            _ => select_first_before_fix(&items),
        };
        match selected {
            Some(bic) => Ok(BicPrediction {
                fc,
                path: PredictionPath::WorkItem,
                reason: RouteReason::WorkItemFound,
                candidates: vec![bic],
                work_item_count,
                diagnostics,
            }),
            None => {
                let reason = if work_item_count > 0 {
                    RouteReason::NoWorkItemBeforeIssue
                } else {
                    RouteReason::NoWorkItems
                };
                self.fallback(repo, fc, issue_date, reason, work_item_count, diagnostics)
            }
        }
    }

    fn fallback(
        &self,
        repo: &RepositoryHandle,
        fc: CommitId,
        issue_date: Option<i64>,
        reason: RouteReason,
        work_item_count: usize,
        diagnostics: Vec<String>,
    ) -> Result<BicPrediction> {
        let filters = FilterConfig {
            issue_filter_enabled: self.config.issue_filter,
            one_commit_filter_enabled: self.config.one_commit_filter,
            issue_date,
        };
        let set = self.source.candidates(repo, fc)?;
        Ok(BicPrediction {
            fc,
            path: PredictionPath::Fallback,
            reason,
            candidates: filters.run(set, self.config.fallback)?,
            work_item_count,
            diagnostics,
        })
    }

    fn extraction_notes(&self, fc: CommitId) -> Vec<String> {
        let key = fc.to_string();
        self.extractor
            .diagnostics()
            .snapshot()
            .into_iter()
            .filter(|d| d.commit == key)
            .map(|d| format!("{}: {}", d.file, d.reason))
            .collect()
    }
}

/// Walks first-parent history from `fc` back to `oldest_time` (at most
/// `max_commits` commits, `fc` included) and builds its tracking matrix.
pub fn mine_tracking_matrix(
    repo: &RepositoryHandle,
    extractor: &MethodExtractor,
    fc: CommitId,
    oldest_time: i64,
    max_commits: usize,
) -> Result<TrackingMatrix> {
    let fc_changes = extractor.modified_methods(repo, fc)?;
    let history = repo.walk_history(fc, oldest_time, max_commits)?;
    let change_sets = history
        .iter()
        .map(|meta| extractor.modified_methods(repo, meta.id))
        .collect::<Result<Vec<_>>>()?;
    let timed: Vec<TimedChangeSet<'_>> = change_sets
        .iter()
        .zip(&history)
        .map(|(changes, meta)| TimedChangeSet {
            changes,
            commit_time: meta.commit_time,
        })
        .collect();
    build_tracking_matrix(&fc_changes, &timed)
}

/// One-off prediction with a fresh extractor and blame-based fallback.
pub fn predict_bic(
    repo: &RepositoryHandle,
    fc: CommitId,
    issue_date: Option<i64>,
    config: &PredictConfig,
) -> Result<BicPrediction> {
    Predictor::new(config.clone()).predict(repo, fc, issue_date)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub parallelism: usize,
    pub cache_dir: PathBuf,
    /// How to fill in missing issue dates.
    pub offset: OffsetMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub issue_date: Option<i64>,
    pub issue_date_kind: Option<IssueDateKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<BicPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records: usize,
    pub errors: usize,
    pub work_item_path: usize,
    pub fallback_path: usize,
    /// Records whose window held at least one work item besides the fix.
    pub with_work_items: usize,
    /// Of those, records that still fell back (no work item before the issue).
    pub work_items_not_before_issue: usize,
    pub issue_date_after_fix: usize,
    /// Work items summed over records that took the work-item path.
    pub total_work_items: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRun {
    pub outcomes: Vec<RecordOutcome>,
    pub summary: RunSummary,
}

impl RunSummary {
    pub fn from_outcomes(outcomes: &[RecordOutcome]) -> Self {
        let mut s = RunSummary {
            records: outcomes.len(),
            ..Default::default()
        };
        for o in outcomes {
            let Some(p) = &o.prediction else {
                s.errors += 1;
                continue;
            };
            match p.path {
                PredictionPath::WorkItem => {
                    s.work_item_path += 1;
                    s.total_work_items += p.work_item_count;
                }
                PredictionPath::Fallback => s.fallback_path += 1,
            }
            if p.work_item_count > 0 {
                s.with_work_items += 1;
            }
            match p.reason {
                RouteReason::NoWorkItemBeforeIssue => s.work_items_not_before_issue += 1,
                RouteReason::IssueDateAfterFix => s.issue_date_after_fix += 1,
                _ => {}
            }
        }
        s
    }
}

/// Predicts every record on `options.parallelism` workers. Output order
/// matches input order; a failing record becomes an error entry.
pub fn run_dataset(predictor: &Predictor, records: &[FixRecord], options: &RunOptions) -> Result<DatasetRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| Error::Format {
            what: "thread pool",
            message: e.to_string(),
        })?;
    let outcomes: Vec<RecordOutcome> =
        pool.install(|| records.par_iter().map(|r| run_record(predictor, r, options)).collect());
    let summary = RunSummary::from_outcomes(&outcomes);
    Ok(DatasetRun { outcomes, summary })
}

fn run_record(predictor: &Predictor, record: &FixRecord, options: &RunOptions) -> RecordOutcome {
    let mut outcome = RecordOutcome {
        id: record.id.clone(),
        issue_date: None,
        issue_date_kind: None,
        prediction: None,
        error: None,
    };
    let result = open_repository(&record.repo, &options.cache_dir).and_then(|repo| {
        let (date, kind) = resolve_issue_date(&repo, record, options.offset)?;
        outcome.issue_date = Some(date);
        outcome.issue_date_kind = Some(kind);
        predictor.predict(&repo, record.fc, Some(date))
    });
    match result {
        Ok(p) => outcome.prediction = Some(p),
        Err(e) => {
            log::warn!("record {}: {e}", record.id);
            outcome.error = Some(e.to_string());
        }
    }
    outcome
}
