//! Read-only repository access: opening and caching clones, first-parent
//! history walks, per-commit diffs with rename detection, and line blame.
//!
//! All ordering and date windows use committer time. Author time is carried
//! in [`CommitMeta`] for auditing only.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use git2::{BlameOptions, DiffFindOptions, DiffOptions, Oid, Patch, Repository, RepositoryOpenFlags};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A full 40-character commit object id.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommitId([u8; 20]);

impl CommitId {
    pub fn from_bytes(bytes: [u8; 20]) -> Self {
        CommitId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// The conventional 9-character abbreviation.
    pub fn short(&self) -> String {
        let mut s = self.to_string();
        s.truncate(9);
        s
    }

    fn oid(&self) -> Oid {
        Oid::from_bytes(&self.0).expect("20-byte oid")
    }
}

impl From<Oid> for CommitId {
    fn from(oid: Oid) -> Self {
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(oid.as_bytes());
        CommitId(bytes)
    }
}

impl FromStr for CommitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 40 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::InvalidCommitId(s.to_string()));
        }
        let mut bytes = [0u8; 20];
        hex::decode_to_slice(s.to_ascii_lowercase(), &mut bytes)
            .map_err(|_| Error::InvalidCommitId(s.to_string()))?;
        Ok(CommitId(bytes))
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CommitId({})", self.short())
    }
}

impl Serialize for CommitId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CommitId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub id: CommitId,
    pub parents: Vec<CommitId>,
    pub author_time: i64,
    pub commit_time: i64,
    pub message: String,
}

impl CommitMeta {
    pub fn is_merge(&self) -> bool {
        self.parents.len() > 1
    }

    pub fn first_parent(&self) -> Option<CommitId> {
        self.parents.first().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Deleted,
    Modified,
    Renamed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub tag: LineTag,
    /// 1-based line number in the pre-image, for removed lines.
    pub old_lineno: Option<usize>,
    /// 1-based line number in the post-image, for added lines.
    pub new_lineno: Option<usize>,
}

/// A zero-context hunk: every line in it is a change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<DiffLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub kind: ChangeKind,
    pub binary: bool,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    /// Pre-image line numbers this diff removes or rewrites.
    pub fn removed_lines(&self) -> BTreeSet<usize> {
        self.lines_with(LineTag::Removed, |l| l.old_lineno)
    }

    /// Post-image line numbers this diff adds or rewrites.
    pub fn added_lines(&self) -> BTreeSet<usize> {
        self.lines_with(LineTag::Added, |l| l.new_lineno)
    }

    fn lines_with(&self, tag: LineTag, pick: impl Fn(&DiffLine) -> Option<usize>) -> BTreeSet<usize> {
        self.hunks
            .iter()
            .flat_map(|h| h.lines.iter())
            .filter(|l| l.tag == tag)
            .filter_map(pick)
            .collect()
    }

    /// The path that identifies this file after the change.
    pub fn identity_path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .expect("a file diff has at least one path")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlameAttribution {
    pub file: String,
    pub line: usize,
    pub origin: CommitId,
}

/// A read-only handle over one local repository.
///
/// Handles are not shareable between threads; parallel callers open one each.
pub struct RepositoryHandle {
    repo: Repository,
    key: String,
    cloned: bool,
}

impl fmt::Debug for RepositoryHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepositoryHandle")
            .field("key", &self.key)
            .field("cloned", &self.cloned)
            .finish()
    }
}

pub fn is_remote(source: &str) -> bool {
    if source.contains("://") {
        return true;
    }
    // scp-like `user@host:path`
    match (source.find('@'), source.find(':')) {
        (Some(at), Some(colon)) => at < colon && !source[..at].contains('/'),
        _ => false,
    }
}

/// The per-URL directory name inside the clone cache.
pub fn cache_key(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    hex::encode(&digest[..12])
}

/// Opens a local repository, or clones a remote one into `cache_dir` the
/// first time it is seen and reuses that clone afterwards.
pub fn open_repository(source: &str, cache_dir: &Path) -> Result<RepositoryHandle> {
    let (repo, cloned) = if is_remote(source) {
        open_cached_clone(source, cache_dir)?
    } else {
        let path = Path::new(source);
        let repo = Repository::open_ext(path, RepositoryOpenFlags::NO_SEARCH, std::iter::empty::<&str>())
            .map_err(|_| Error::NotARepository(path.to_path_buf()))?;
        (repo, false)
    };
    if repo.head().and_then(|h| h.peel_to_commit()).is_err() {
        return Err(Error::NoDefaultBranch(source.to_string()));
    }
    let key = std::fs::canonicalize(repo.path())
        .unwrap_or_else(|_| repo.path().to_path_buf())
        .to_string_lossy()
        .into_owned();
    Ok(RepositoryHandle { repo, key, cloned })
}

fn open_cached_clone(url: &str, cache_dir: &Path) -> Result<(Repository, bool)> {
    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let key = cache_key(url);
    let dest = cache_dir.join(&key);
    let lock_path = cache_dir.join(format!("{key}.lock"));
    let lock = File::create(&lock_path).map_err(|e| Error::io(&lock_path, e))?;
    lock.lock().map_err(|e| Error::io(&lock_path, e))?;

    if dest.exists() {
        let repo = Repository::open_bare(&dest).map_err(|_| Error::NotARepository(dest.clone()))?;
        return Ok((repo, false));
    }

    let staging: PathBuf = cache_dir.join(format!("{key}.partial"));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    log::info!("cloning {url} into {}", dest.display());
    let result = git2::build::RepoBuilder::new().bare(true).clone(url, &staging);
    if let Err(e) = result {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(Error::Clone {
            url: url.to_string(),
            message: e.message().to_string(),
        });
    }
    std::fs::rename(&staging, &dest).map_err(|e| Error::io(&dest, e))?;
    let repo = Repository::open_bare(&dest).map_err(|_| Error::NotARepository(dest.clone()))?;
    Ok((repo, true))
}

impl RepositoryHandle {
    /// Stable identity of the underlying repository (its canonical git dir).
    pub fn key(&self) -> &str {
        &self.key
    }

    /// Whether opening this handle performed a clone.
    pub fn was_cloned(&self) -> bool {
        self.cloned
    }

    pub fn head(&self) -> Result<CommitId> {
        Ok(self.repo.head()?.peel_to_commit()?.id().into())
    }

    /// Resolves any revision expression (full or abbreviated hash, ref name).
    pub fn resolve(&self, spec: &str) -> Result<CommitId> {
        self.repo
            .revparse_single(spec)
            .and_then(|o| o.peel_to_commit())
            .map(|c| c.id().into())
            .map_err(|_| Error::UnresolvedCommit(spec.to_string()))
    }

    fn find_commit(&self, id: CommitId) -> Result<git2::Commit<'_>> {
        self.repo
            .find_commit(id.oid())
            .map_err(|_| Error::UnresolvedCommit(id.to_string()))
    }

    pub fn commit_meta(&self, id: CommitId) -> Result<CommitMeta> {
        let commit = self.find_commit(id)?;
        let author_time = commit.author().when().seconds();
        Ok(CommitMeta {
            id,
            parents: commit.parent_ids().map(CommitId::from).collect(),
            author_time,
            commit_time: commit.time().seconds(),
            message: String::from_utf8_lossy(commit.message_bytes()).into_owned(),
        })
    }

    /// First-parent ancestors of `start`, newest first, `start` included.
    ///
    /// Stops before the first commit older than `oldest_time` or once
    /// `max_commits` commits have been collected. Merge commits are kept;
    /// callers check [`CommitMeta::is_merge`].
    pub fn walk_history(
        &self,
        start: CommitId,
        oldest_time: i64,
        max_commits: usize,
    ) -> Result<Vec<CommitMeta>> {
        let first = self.commit_meta(start)?;
        if oldest_time > first.commit_time {
            return Err(Error::InvalidWindow {
                oldest_time,
                start_time: first.commit_time,
            });
        }
        let mut out = Vec::new();
        let mut next = Some(first);
        while let Some(meta) = next {
            if out.len() >= max_commits || meta.commit_time < oldest_time {
                break;
            }
            next = match meta.first_parent() {
                Some(parent) => Some(self.commit_meta(parent)?),
                None => None,
            };
            out.push(meta);
        }
        Ok(out)
    }

    /// Changes of `commit` against its first parent (the empty tree for a
    /// root commit), with rename detection at the default similarity.
    pub fn diff_commit(&self, commit: CommitId) -> Result<Vec<FileDiff>> {
        let c = self.find_commit(commit)?;
        let new_tree = c.tree()?;
        let old_tree = match c.parent_ids().next() {
            Some(p) => Some(self.repo.find_commit(p)?.tree()?),
            None => None,
        };
        let mut opts = DiffOptions::new();
        opts.context_lines(0);
        let mut diff = self
            .repo
            .diff_tree_to_tree(old_tree.as_ref(), Some(&new_tree), Some(&mut opts))?;
        diff.find_similar(Some(DiffFindOptions::new().renames(true)))?;

        let mut files = Vec::new();
        for idx in 0..diff.deltas().len() {
            let delta = diff.get_delta(idx).expect("delta index in range");
            let kind = match delta.status() {
                git2::Delta::Added | git2::Delta::Copied => ChangeKind::Added,
                git2::Delta::Deleted => ChangeKind::Deleted,
                git2::Delta::Renamed => ChangeKind::Renamed,
                git2::Delta::Modified | git2::Delta::Typechange => ChangeKind::Modified,
                _ => continue,
            };
            let path_of = |f: git2::DiffFile<'_>| f.path().map(|p| p.to_string_lossy().into_owned());
            let old_path = if kind == ChangeKind::Added { None } else { path_of(delta.old_file()) };
            let new_path = if kind == ChangeKind::Deleted { None } else { path_of(delta.new_file()) };

            let patch = Patch::from_diff(&diff, idx)?;
            let binary = delta.flags().is_binary() || patch.is_none();
            let hunks = match patch {
                Some(patch) if !binary => collect_hunks(&patch)?,
                _ => Vec::new(),
            };
            files.push(FileDiff {
                old_path,
                new_path,
                kind,
                binary,
                hunks,
            });
        }
        Ok(files)
    }

    /// Raw content of `path` at `commit`, or `None` if it does not exist there.
    pub fn file_at(&self, commit: CommitId, path: &str) -> Result<Option<Vec<u8>>> {
        let tree = self.find_commit(commit)?.tree()?;
        let entry = match tree.get_path(Path::new(path)) {
            Ok(entry) => entry,
            Err(e) if e.code() == git2::ErrorCode::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match entry.to_object(&self.repo)?.into_blob() {
            Ok(blob) => Ok(Some(blob.content().to_vec())),
            Err(_) => Ok(None),
        }
    }

    /// The commit that last touched each requested line of `file` as of
    /// revision `at`. Lines are 1-based and matched exactly.
    pub fn blame_lines(
        &self,
        at: CommitId,
        file: &str,
        lines: &BTreeSet<usize>,
    ) -> Result<Vec<BlameAttribution>> {
        let content = self.file_at(at, file)?.ok_or_else(|| Error::MissingFile {
            commit: at.to_string(),
            path: file.to_string(),
        })?;
        let len = line_count(&content);
        if let Some(&bad) = lines.iter().find(|&&l| l == 0 || l > len) {
            return Err(Error::LineOutOfRange {
                path: file.to_string(),
                line: bad,
                len,
            });
        }
        let (Some(&min), Some(&max)) = (lines.first(), lines.last()) else {
            return Ok(Vec::new());
        };
        let mut opts = BlameOptions::new();
        opts.newest_commit(at.oid()).min_line(min).max_line(max);
        let blame = self.repo.blame_file(Path::new(file), Some(&mut opts))?;
        lines
            .iter()
            .map(|&line| {
                let hunk = blame.get_line(line).ok_or_else(|| Error::Format {
                    what: "blame",
                    message: format!("no blame hunk for {file}:{line}"),
                })?;
                Ok(BlameAttribution {
                    file: file.to_string(),
                    line,
                    origin: hunk.final_commit_id().into(),
                })
            })
            .collect()
    }

    /// True when `ancestor` is `of` or reachable from it.
    pub fn is_ancestor(&self, ancestor: CommitId, of: CommitId) -> Result<bool> {
        if ancestor == of {
            return Ok(true);
        }
        Ok(self.repo.graph_descendant_of(of.oid(), ancestor.oid())?)
    }
}

fn collect_hunks(patch: &Patch<'_>) -> Result<Vec<Hunk>> {
    let mut hunks = Vec::with_capacity(patch.num_hunks());
    for h in 0..patch.num_hunks() {
        let (header, count) = patch.hunk(h)?;
        let mut lines = Vec::with_capacity(count);
        for l in 0..count {
            let line = patch.line_in_hunk(h, l)?;
            let tag = match line.origin() {
                '+' => LineTag::Added,
                '-' => LineTag::Removed,
                _ => continue,
            };
            lines.push(DiffLine {
                tag,
                old_lineno: line.old_lineno().map(|n| n as usize),
                new_lineno: line.new_lineno().map(|n| n as usize),
            });
        }
        hunks.push(Hunk {
            old_start: header.old_start() as usize,
            old_count: header.old_lines() as usize,
            new_start: header.new_start() as usize,
            new_count: header.new_lines() as usize,
            lines,
        });
    }
    Ok(hunks)
}

/// Number of lines as git counts them (a trailing newline does not start a line).
pub fn line_count(content: &[u8]) -> usize {
    if content.is_empty() {
        return 0;
    }
    let newlines = content.iter().filter(|&&b| b == b'\n').count();
    if content.ends_with(b"\n") {
        newlines
    } else {
        newlines + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_id_parsing() {
        let hex = "8c5f991e6876de001ff11829ceb9894d11c80014";
        let id: CommitId = hex.parse().unwrap();
        assert_eq!(id.to_string(), hex);
        assert_eq!(id.short(), "8c5f991e6");
        let upper: CommitId = hex.to_uppercase().parse().unwrap();
        assert_eq!(upper, id);
        assert!(hex[..39].parse::<CommitId>().is_err());
        assert!(format!("{hex}0").parse::<CommitId>().is_err());
        assert!("zz5f991e6876de001ff11829ceb9894d11c80014".parse::<CommitId>().is_err());
    }

    #[test]
    fn commit_id_order_matches_hex_order() {
        let a: CommitId = "0f00000000000000000000000000000000000000".parse().unwrap();
        let b: CommitId = "a000000000000000000000000000000000000000".parse().unwrap();
        assert!(a < b);
        assert!(a.to_string() < b.to_string());
    }

    #[test]
    fn remote_detection() {
        assert!(is_remote("https://github.com/nickvandewiele/RMG-Java"));
        assert!(is_remote("file:///tmp/repo"));
        assert!(is_remote("git@github.com:org/repo.git"));
        assert!(!is_remote("/tmp/repo"));
        assert!(!is_remote("relative/dir"));
        assert!(!is_remote("C:/windows/path"));
    }

    #[test]
    fn cache_key_is_stable_and_distinct() {
        let a = cache_key("https://example.com/a.git");
        assert_eq!(a, cache_key("https://example.com/a.git"));
        assert_ne!(a, cache_key("https://example.com/b.git"));
        assert_eq!(a.len(), 24);
    }

    #[test]
    fn counts_lines_like_git() {
        assert_eq!(line_count(b""), 0);
        assert_eq!(line_count(b"a"), 1);
        assert_eq!(line_count(b"a\n"), 1);
        assert_eq!(line_count(b"a\nb"), 2);
        assert_eq!(line_count(b"a\n\n"), 2);
    }
}
