//! Deterministic git repositories for tests.
//!
//! Every scenario is built from scratch with fixed author/committer
//! timestamps, so object ids are stable across runs and machines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use git2::{Oid, Repository, Signature, Time};

mod scenarios;

pub use scenarios::*;

/// 2020-09-13T12:26:40Z; all scenarios count days from here.
pub const EPOCH: i64 = 1_600_000_000;
pub const DAY: i64 = 86_400;

pub fn day(n: i64) -> i64 {
    EPOCH + n * DAY
}

enum Location {
    Temp(tempfile::TempDir),
    Fixed(PathBuf),
}

impl Location {
    fn path(&self) -> &Path {
        match self {
            Location::Temp(dir) => dir.path(),
            Location::Fixed(path) => path,
        }
    }
}

/// Builds a repository commit by commit from a staged snapshot of files.
pub struct RepoBuilder {
    location: Location,
    repo: Repository,
    files: BTreeMap<String, Vec<u8>>,
    head: Option<Oid>,
    branch: String,
    labels: BTreeMap<String, Oid>,
    times: BTreeMap<String, i64>,
    snapshots: BTreeMap<Oid, BTreeMap<String, Vec<u8>>>,
}

impl RepoBuilder {
    /// A fresh repository in a temporary directory.
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let repo = Repository::init(dir.path()).expect("git init");
        Self::from_parts(Location::Temp(dir), repo)
    }

    /// A fresh repository at `path`, which must not exist yet.
    pub fn at(path: &Path) -> Self {
        assert!(!path.exists(), "{} already exists", path.display());
        std::fs::create_dir_all(path).expect("create fixture dir");
        let repo = Repository::init(path).expect("git init");
        Self::from_parts(Location::Fixed(path.to_path_buf()), repo)
    }

    fn from_parts(location: Location, repo: Repository) -> Self {
        repo.set_head("refs/heads/main").expect("set HEAD");
        Self {
            location,
            repo,
            files: BTreeMap::new(),
            head: None,
            branch: "main".to_string(),
            labels: BTreeMap::new(),
            times: BTreeMap::new(),
            snapshots: BTreeMap::new(),
        }
    }

    pub fn write(&mut self, path: &str, content: impl AsRef<[u8]>) -> &mut Self {
        self.files.insert(path.to_string(), content.as_ref().to_vec());
        self
    }

    pub fn remove(&mut self, path: &str) -> &mut Self {
        self.files.remove(path);
        self
    }

    pub fn rename(&mut self, from: &str, to: &str) -> &mut Self {
        let content = self.files.remove(from).expect("rename source staged");
        self.files.insert(to.to_string(), content);
        self
    }

    pub fn content(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    /// Commits the staged snapshot on top of the current head.
    pub fn commit(&mut self, label: &str, time: i64) -> Oid {
        let parents: Vec<Oid> = self.head.into_iter().collect();
        self.commit_with_parents(label, time, &parents)
    }

    /// Commits the staged snapshot as a merge of the current head and `other`.
    pub fn merge(&mut self, label: &str, time: i64, other: &str) -> Oid {
        let mut parents: Vec<Oid> = self.head.into_iter().collect();
        parents.push(self.id(other));
        self.commit_with_parents(label, time, &parents)
    }

    /// Moves the builder to `label`, restoring that commit's snapshot, and
    /// makes further commits advance `branch`.
    pub fn checkout(&mut self, label: &str, branch: &str) -> &mut Self {
        let oid = self.id(label);
        self.files = self.snapshots[&oid].clone();
        self.head = Some(oid);
        self.branch = branch.to_string();
        self
    }

    pub fn id(&self, label: &str) -> Oid {
        *self
            .labels
            .get(label)
            .unwrap_or_else(|| panic!("unknown commit label {label}"))
    }

    fn commit_with_parents(&mut self, label: &str, time: i64, parents: &[Oid]) -> Oid {
        assert!(!self.labels.contains_key(label), "duplicate label {label}");
        let tree_id = write_tree(&self.repo, &self.files);
        let tree = self.repo.find_tree(tree_id).expect("tree");
        let sig = Signature::new("Fixture Author", "fixture@example.com", &Time::new(time, 0))
            .expect("signature");
        let parent_commits: Vec<git2::Commit<'_>> = parents
            .iter()
            .map(|p| self.repo.find_commit(*p).expect("parent"))
            .collect();
        let parent_refs: Vec<&git2::Commit<'_>> = parent_commits.iter().collect();
        let oid = self
            .repo
            .commit(None, &sig, &sig, &format!("{label}\n"), &tree, &parent_refs)
            .expect("commit");
        let refname = format!("refs/heads/{}", self.branch);
        self.repo
            .reference(&refname, oid, true, label)
            .expect("update branch");
        self.head = Some(oid);
        self.labels.insert(label.to_string(), oid);
        self.times.insert(label.to_string(), time);
        self.snapshots.insert(oid, self.files.clone());
        oid
    }

    pub fn finish(self) -> FixtureRepo {
        // Leave a clean working tree matching main so the repo also works for `git` users.
        let mut checkout = git2::build::CheckoutBuilder::new();
        checkout.force();
        if self.repo.find_reference("refs/heads/main").is_ok() {
            self.repo.set_head("refs/heads/main").expect("set HEAD");
            self.repo.checkout_head(Some(&mut checkout)).expect("checkout");
        }
        FixtureRepo {
            location: self.location,
            labels: self.labels,
            times: self.times,
        }
    }
}

impl Default for RepoBuilder {
    fn default() -> Self {
        Self::new()
    }
}

fn write_tree(repo: &Repository, files: &BTreeMap<String, Vec<u8>>) -> Oid {
    let entries: Vec<(&str, &[u8])> = files
        .iter()
        .map(|(p, c)| (p.as_str(), c.as_slice()))
        .collect();
    write_subtree(repo, &entries)
}

fn write_subtree(repo: &Repository, entries: &[(&str, &[u8])]) -> Oid {
    let mut builder = repo.treebuilder(None).expect("treebuilder");
    let mut dirs: BTreeMap<&str, Vec<(&str, &[u8])>> = BTreeMap::new();
    for (path, content) in entries {
        match path.split_once('/') {
            Some((dir, rest)) => dirs.entry(dir).or_default().push((rest, content)),
            None => {
                let blob = repo.blob(content).expect("blob");
                builder.insert(path, blob, 0o100644).expect("insert blob");
            }
        }
    }
    for (dir, children) in dirs {
        let sub = write_subtree(repo, &children);
        builder.insert(dir, sub, 0o040000).expect("insert tree");
    }
    builder.write().expect("write tree")
}

/// A finished fixture repository plus the label → commit mapping used to build it.
pub struct FixtureRepo {
    location: Location,
    labels: BTreeMap<String, Oid>,
    times: BTreeMap<String, i64>,
}

impl FixtureRepo {
    pub fn path(&self) -> &Path {
        self.location.path()
    }

    pub fn id(&self, label: &str) -> String {
        self.oid(label).to_string()
    }

    pub fn oid(&self, label: &str) -> Oid {
        *self
            .labels
            .get(label)
            .unwrap_or_else(|| panic!("unknown commit label {label}"))
    }

    pub fn time(&self, label: &str) -> i64 {
        self.times[label]
    }

    /// Reverse lookup, for readable assertions.
    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.labels
            .iter()
            .find(|(_, oid)| oid.to_string() == id)
            .map(|(l, _)| l.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }
}
