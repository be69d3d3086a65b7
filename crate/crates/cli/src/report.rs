//! Output files and terminal summaries.
//!
//! CSV outputs start with a `# config: <json>` line; JSON outputs carry a
//! `config` field. Both hold the effective configuration of the run.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use workitem_szz::eval::{sweep_to_csv, Dataset, MetricsSummary, RecordError, SweepRow};
use workitem_szz::methods::MethodExtractor;
use workitem_szz::predict::{DatasetRun, RunSummary};
use workitem_szz::workitem::{TrackingMatrix, WorkItemSet};

use crate::config::EffectiveConfig;

pub fn matrix_text(matrix: &TrackingMatrix, items: &WorkItemSet) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "tracking matrix of {}: {} commits x {} methods",
        matrix.fc,
        matrix.rows.len(),
        matrix.columns.len()
    );
    for (j, col) in matrix.columns.iter().enumerate() {
        let _ = writeln!(s, "  [{j}] {col}");
    }
    for row in &matrix.rows {
        let bits: String = row.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let _ = writeln!(s, "{} {} {bits}", row.commit, row.commit_time);
    }
    let _ = writeln!(s, "work items at factor {}: {}", items.factor, items.items.len());
    for w in &items.items {
        let _ = writeln!(s, "{}", w.commit);
    }
    s
}

fn config_comment(config: &EffectiveConfig) -> Result<String> {
    Ok(format!("# config: {}\n", serde_json::to_string(config)?))
}

fn write(path: &Path, content: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct DatasetInfo<'a> {
    records: usize,
    excluded: usize,
    invalid: &'a [RecordError],
}

impl<'a> DatasetInfo<'a> {
    fn of(d: &'a Dataset) -> Self {
        Self {
            records: d.records.len(),
            excluded: d.excluded,
            invalid: &d.errors,
        }
    }
}

fn predictions_csv(config: &EffectiveConfig, run: &DatasetRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "fc",
        "issue_date",
        "path",
        "candidates",
        "work_item_count",
        "diagnostics",
        "error",
    ])?;
    for o in &run.outcomes {
        let date = o.issue_date.map(|d| d.to_string()).unwrap_or_default();
        match &o.prediction {
            Some(p) => {
                let candidates: Vec<String> = p.candidates.iter().map(ToString::to_string).collect();
                w.write_record([
                    o.id.as_str(),
                    &p.fc.to_string(),
                    &date,
                    &p.path.to_string(),
                    &candidates.join(" "),
                    &p.work_item_count.to_string(),
                    &p.diagnostics.join("; "),
                    "",
                ])?;
            }
            None => {
                let error = o.error.clone().unwrap_or_default();
                w.write_record([o.id.as_str(), "", &date, "", "", "", "", &error])?;
            }
        }
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(config_comment(config)? + &body)
}

pub fn write_evaluation(
    dir: &Path,
    config: &EffectiveConfig,
    dataset: &Dataset,
    run: &DatasetRun,
    metrics: &MetricsSummary,
    extractor: &MethodExtractor,
) -> Result<()> {
    let mut jsonl = serde_json::to_string(&serde_json::json!({ "config": config }))? + "\n";
    for o in &run.outcomes {
        jsonl.push_str(&serde_json::to_string(o)?);
        jsonl.push('\n');
    }
    write(&dir.join("predictions.jsonl"), jsonl)?;
    write(&dir.join("predictions.csv"), predictions_csv(config, run)?)?;
    let report = serde_json::json!({
        "config": config,
        "dataset": DatasetInfo::of(dataset),
        "summary": run.summary,
        "metrics": metrics,
    });
    write(&dir.join("metrics.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    extractor
        .diagnostics()
        .write_jsonl(&dir.join("diagnostics.jsonl"))?;
    Ok(())
}

pub fn write_sweep(
    dir: &Path,
    config: &EffectiveConfig,
    dataset: &Dataset,
    results: &[(SweepRow, DatasetRun)],
) -> Result<()> {
    let rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    write(&dir.join("sweep.csv"), config_comment(config)? + &sweep_to_csv(&rows)?)?;
    let detail: Vec<serde_json::Value> = results
        .iter()
        .map(|(row, run)| serde_json::json!({ "row": row, "summary": run.summary }))
        .collect();
    let report = serde_json::json!({
        "config": config,
        "dataset": DatasetInfo::of(dataset),
        "factors": detail,
    });
    write(&dir.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")
}

pub fn summary_text(summary: &RunSummary, metrics: &MetricsSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "records: {}", summary.records);
    let _ = writeln!(s, "part A (work item): {}", summary.work_item_path);
    let _ = writeln!(s, "part B (fallback): {}", summary.fallback_path);
    let _ = writeln!(s, "errors: {}", summary.errors);
    let _ = writeln!(
        s,
        "with work items but none before the issue: {}",
        summary.work_items_not_before_issue
    );
    let _ = writeln!(s, "issue date after fix: {}", summary.issue_date_after_fix);
    let _ = writeln!(s, "tp: {}  fp: {}  oracle bics: {}", metrics.tp, metrics.fp, metrics.oracle_bics);
    let _ = writeln!(
        s,
        "precision: {:.3}{}  recall: {:.3}  f1: {:.3}",
        metrics.precision,
        if metrics.precision_undefined { " (undefined)" } else { "" },
        metrics.recall,
        metrics.f1
    );
    s
}

pub fn sweep_text(rows: &[SweepRow]) -> String {
    let mut s = String::from("factor  fcs_with_wi  total_wi  tp  fp  recall  precision  f1\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<6}  {:>11}  {:>8}  {:>2}  {:>2}  {:.3}   {:.3}      {:.3}",
            r.factor.to_string(),
            r.fcs_with_workitems,
            r.total_workitems,
            r.tp,
            r.fp,
            r.recall,
            r.precision,
            r.f1
        );
    }
    s
}
