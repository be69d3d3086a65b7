//! Per-commit sets of modified methods.
//!
//! A method counts as modified by a commit when a changed line falls inside
//! its span: removed lines are checked against the pre-image, added lines
//! against the post-image. Deleted methods are therefore reported through
//! their pre-image span. Test code and files in unsupported languages are
//! skipped.

mod languages;
mod policy;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

pub use languages::{extract_functions, Extraction, FunctionSpan, Language};
pub use policy::{is_test_path, TestPathPolicy, DEFAULT_TEST_PATTERNS, DEFAULT_TEST_SEGMENTS};

use crate::error::{Error, Result};
use crate::git::{CommitId, FileDiff, RepositoryHandle};

/// Files above this size are not parsed.
pub const MAX_PARSE_BYTES: usize = 4 << 20;

/// Identity of one function: post-rename file path, enclosing declaration
/// chain plus name joined with `::`, and parameter count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodRef {
    pub file: String,
    pub qualified_name: String,
    pub arity: usize,
}

impl MethodRef {
    pub fn new(file: impl Into<String>, qualified_name: impl Into<String>, arity: usize) -> Self {
        Self {
            file: file.into(),
            qualified_name: qualified_name.into(),
            arity,
        }
    }
}

impl std::fmt::Display for MethodRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}/{}", self.file, self.qualified_name, self.arity)
    }
}

impl std::str::FromStr for MethodRef {
    type Err = Error;

    /// Parses the `file#qualified_name/arity` form produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format {
            what: "method reference",
            message: s.to_string(),
        };
        let (rest, arity) = s.rsplit_once('/').ok_or_else(bad)?;
        let arity = arity.parse().map_err(|_| bad())?;
        let (file, name) = rest.rsplit_once('#').ok_or_else(bad)?;
        if file.is_empty() || name.is_empty() {
            return Err(bad());
        }
        Ok(MethodRef::new(file, name, arity))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodChangeSet {
    pub commit: CommitId,
    pub methods: BTreeSet<MethodRef>,
    pub is_merge: bool,
}

impl MethodChangeSet {
    pub fn new(commit: CommitId, methods: impl IntoIterator<Item = MethodRef>) -> Self {
        Self {
            commit,
            methods: methods.into_iter().collect(),
            is_merge: false,
        }
    }

    pub fn merge(commit: CommitId) -> Self {
        Self {
            commit,
            methods: BTreeSet::new(),
            is_merge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub commit: String,
    pub file: String,
    pub reason: String,
}

/// Collects non-fatal extraction problems; safe to share between workers.
#[derive(Debug, Default)]
pub struct DiagnosticsLog {
    records: Mutex<Vec<Diagnostic>>,
}

impl DiagnosticsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, commit: impl ToString, file: impl Into<String>, reason: impl Into<String>) {
        self.records.lock().expect("diagnostics lock").push(Diagnostic {
            commit: commit.to_string(),
            file: file.into(),
            reason: reason.into(),
        });
    }

    /// All records, sorted and deduplicated so output is independent of
    /// worker scheduling.
    pub fn snapshot(&self) -> Vec<Diagnostic> {
        let mut records = self.records.lock().expect("diagnostics lock").clone();
        records.sort();
        records.dedup();
        records
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("diagnostics lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for record in self.snapshot() {
            serde_json::to_writer(&mut out, &record)?;
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }
}

/// Computes the set of non-test methods touched by `commit`.
///
/// Merge commits yield an empty set flagged `is_merge`. Files that cannot
/// be parsed are skipped and noted in `diagnostics`.
pub fn modified_methods(
    repo: &RepositoryHandle,
    commit: CommitId,
    policy: &TestPathPolicy,
    diagnostics: &DiagnosticsLog,
) -> Result<MethodChangeSet> {
    let meta = repo.commit_meta(commit)?;
    if meta.is_merge() {
        return Ok(MethodChangeSet::merge(commit));
    }
    let mut methods = BTreeSet::new();
    for diff in repo.diff_commit(commit)? {
        if diff.binary {
            continue;
        }
        let is_test = [&diff.old_path, &diff.new_path]
            .into_iter()
            .flatten()
            .any(|p| policy.is_test_path(p));
        if is_test {
            continue;
        }
        collect_file_methods(repo, &meta.parents, commit, &diff, diagnostics, &mut methods)?;
    }
    Ok(MethodChangeSet {
        commit,
        methods,
        is_merge: false,
    })
}

fn collect_file_methods(
    repo: &RepositoryHandle,
    parents: &[CommitId],
    commit: CommitId,
    diff: &FileDiff,
    diagnostics: &DiagnosticsLog,
    out: &mut BTreeSet<MethodRef>,
) -> Result<()> {
    let identity = diff.identity_path();
    let removed = diff.removed_lines();
    let added = diff.added_lines();

    let images = [
        (diff.old_path.as_deref(), parents.first().copied(), removed),
        (diff.new_path.as_deref(), Some(commit), added),
    ];
    for (path, revision, lines) in images {
        let (Some(path), Some(revision)) = (path, revision) else {
            continue;
        };
        if lines.is_empty() {
            continue;
        }
        let Some(lang) = Language::from_path(path) else {
            continue;
        };
        let Some(content) = repo.file_at(revision, path)? else {
            continue;
        };
        if content.len() > MAX_PARSE_BYTES {
            diagnostics.record(commit, path, format!("skipped: {} bytes exceeds parse limit", content.len()));
            continue;
        }
        let Some(extraction) = extract_functions(lang, &content) else {
            diagnostics.record(commit, path, "skipped: parser failed");
            continue;
        };
        if extraction.has_syntax_errors {
            diagnostics.record(commit, path, "parsed with syntax errors");
        }
        if extraction.anonymous > 0 {
            diagnostics.record(
                commit,
                path,
                format!("{} anonymous functions not tracked", extraction.anonymous),
            );
        }
        for f in extraction.functions {
            if lines.range(f.start_line..=f.end_line).next().is_some() {
                out.insert(MethodRef::new(identity, f.qualified_name, f.arity));
            }
        }
    }
    Ok(())
}

/// Change sets keyed by (repository, commit); concurrent readers and writers
/// are fine.
#[derive(Debug, Default)]
pub struct ChangeSetCache {
    entries: RwLock<HashMap<(String, CommitId), Arc<MethodChangeSet>>>,
}

impl ChangeSetCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, repo_key: &str, commit: CommitId) -> Option<Arc<MethodChangeSet>> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&(repo_key.to_string(), commit))
            .cloned()
    }

    pub fn insert(&self, repo_key: &str, set: MethodChangeSet) -> Arc<MethodChangeSet> {
        let mut entries = self.entries.write().expect("cache lock");
        entries
            .entry((repo_key.to_string(), set.commit))
            .or_insert_with(|| Arc::new(set))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// [`modified_methods`] bundled with its policy, a shared cache and a
/// shared diagnostics log.
#[derive(Debug, Clone)]
pub struct MethodExtractor {
    policy: TestPathPolicy,
    cache: Arc<ChangeSetCache>,
    diagnostics: Arc<DiagnosticsLog>,
}

impl MethodExtractor {
    pub fn new(policy: TestPathPolicy) -> Self {
        Self {
            policy,
            cache: Arc::new(ChangeSetCache::new()),
            diagnostics: Arc::new(DiagnosticsLog::new()),
        }
    }

    pub fn policy(&self) -> &TestPathPolicy {
        &self.policy
    }

    pub fn cache(&self) -> &ChangeSetCache {
        &self.cache
    }

    pub fn diagnostics(&self) -> &DiagnosticsLog {
        &self.diagnostics
    }

    pub fn modified_methods(&self, repo: &RepositoryHandle, commit: CommitId) -> Result<Arc<MethodChangeSet>> {
        if let Some(hit) = self.cache.get(repo.key(), commit) {
            return Ok(hit);
        }
        let set = modified_methods(repo, commit, &self.policy, &self.diagnostics)?;
        Ok(self.cache.insert(repo.key(), set))
    }
}

impl Default for MethodExtractor {
    fn default() -> Self {
        Self::new(TestPathPolicy::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ref_order_is_file_name_arity() {
        let mut refs = vec![
            MethodRef::new("b.c", "a", 0),
            MethodRef::new("a.c", "z", 1),
            MethodRef::new("a.c", "z", 0),
            MethodRef::new("a.c", "m", 3),
        ];
        refs.sort();
        assert_eq!(
            refs,
            vec![
                MethodRef::new("a.c", "m", 3),
                MethodRef::new("a.c", "z", 0),
                MethodRef::new("a.c", "z", 1),
                MethodRef::new("b.c", "a", 0),
            ]
        );
    }

    #[test]
    fn method_ref_text_form() {
        let m = MethodRef::new("src/a#b/x.cpp", "ns::A::operator/", 1);
        assert_eq!(m.to_string(), "src/a#b/x.cpp#ns::A::operator//1");
        // Names may contain '/', files may contain '#': parsing splits on the last of each.
        let simple = MethodRef::new("src/x.py", "C::m", 2);
        assert_eq!(simple.to_string().parse::<MethodRef>().unwrap(), simple);
        assert!("nohash/1".parse::<MethodRef>().is_err());
        assert!("a.c#f/x".parse::<MethodRef>().is_err());
    }

    #[test]
    fn diagnostics_snapshot_is_sorted_and_deduplicated() {
        let log = DiagnosticsLog::new();
        log.record("b", "x", "r");
        log.record("a", "y", "r");
        log.record("b", "x", "r");
        let snap = log.snapshot();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap[0].commit, "a");
    }
}
