use std::collections::BTreeSet;

use workitem_szz::git::{open_repository, ChangeKind, CommitId};
use workitem_szz::Error;
use workitem_szz_fixtures::{abc_linear, blame_layout, day, history_shapes, RepoBuilder, LEXER_C};

fn cid(s: &str) -> CommitId {
    s.parse().unwrap()
}

fn no_cache() -> std::path::PathBuf {
    std::env::temp_dir().join("workitem-szz-unused-cache")
}

#[test]
fn walks_newest_first_including_start() {
    let repo = abc_linear();
    let h = open_repository(repo.path().to_str().unwrap(), &no_cache()).unwrap();
    let c = cid(&repo.id("c"));
    assert_eq!(h.head().unwrap(), c);
    let labels: Vec<_> = h
        .walk_history(c, 0, 100)
        .unwrap()
        .iter()
        .map(|m| repo.label_of(&m.id.to_string()).unwrap().to_string())
        .collect();
    assert_eq!(labels, ["c", "b", "a"]);
    assert_eq!(h.walk_history(c, 0, 2).unwrap().len(), 2);
    // Window bounded by time: b is exactly at the bound and kept.
    assert_eq!(h.walk_history(c, day(1), 100).unwrap().len(), 2);
    assert!(matches!(
        h.walk_history(c, day(3), 100),
        Err(Error::InvalidWindow { .. })
    ));
}

#[test]
fn non_repository_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = open_repository(dir.path().to_str().unwrap(), &no_cache()).unwrap_err();
    assert!(matches!(err, Error::NotARepository(_)));
}

#[test]
fn unknown_commit_is_an_error() {
    let repo = abc_linear();
    let h = open_repository(repo.path().to_str().unwrap(), &no_cache()).unwrap();
    let missing = cid("0123456789012345678901234567890123456789");
    assert!(matches!(h.commit_meta(missing), Err(Error::UnresolvedCommit(_))));
    assert!(matches!(h.resolve("nope"), Err(Error::UnresolvedCommit(_))));
    assert_eq!(h.resolve(&repo.id("b")[..10]).unwrap(), cid(&repo.id("b")));
}

#[test]
fn remote_clone_is_cached() {
    let repo = abc_linear();
    let cache = tempfile::tempdir().unwrap();
    let url = format!("file://{}", repo.path().display());
    let first = open_repository(&url, cache.path()).unwrap();
    assert!(first.was_cloned());
    let second = open_repository(&url, cache.path()).unwrap();
    assert!(!second.was_cloned());
    assert_eq!(first.key(), second.key());
    assert_eq!(second.head().unwrap(), cid(&repo.id("c")));
    let entries: BTreeSet<String> = std::fs::read_dir(cache.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(entries.iter().all(|e| !e.ends_with(".partial")));
}

#[test]
fn failed_clone_reports_url() {
    let cache = tempfile::tempdir().unwrap();
    let err = open_repository("file:///definitely/not/here.git", cache.path()).unwrap_err();
    assert!(matches!(err, Error::Clone { .. }), "{err}");
}

#[test]
fn repository_without_commits_has_no_default_branch() {
    let dir = tempfile::tempdir().unwrap();
    git2::Repository::init(dir.path()).unwrap();
    let err = open_repository(dir.path().to_str().unwrap(), &no_cache()).unwrap_err();
    assert!(matches!(err, Error::NoDefaultBranch(_)));
}

#[test]
fn diff_shapes() {
    let repo = history_shapes();
    let h = open_repository(repo.path().to_str().unwrap(), &no_cache()).unwrap();

    let root = h.diff_commit(cid(&repo.id("root"))).unwrap();
    assert!(root.iter().all(|d| d.kind == ChangeKind::Added && d.old_path.is_none()));
    assert_eq!(root.len(), 2);

    let rename = h.diff_commit(cid(&repo.id("rename"))).unwrap();
    assert_eq!(rename.len(), 1);
    let d = &rename[0];
    assert_eq!(d.kind, ChangeKind::Renamed);
    assert_eq!(d.old_path.as_deref(), Some("x.c"));
    assert_eq!(d.new_path.as_deref(), Some("y.c"));
    assert_eq!(d.identity_path(), "y.c");
    assert_eq!(d.removed_lines(), [5].into());
    assert_eq!(d.added_lines(), [5].into());

    let merge = cid(&repo.id("merge"));
    let meta = h.commit_meta(merge).unwrap();
    assert!(meta.is_merge());
    assert_eq!(meta.first_parent(), Some(cid(&repo.id("mainline"))));
    assert!(h.is_ancestor(cid(&repo.id("side")), merge).unwrap());
    assert!(!h.is_ancestor(merge, cid(&repo.id("side"))).unwrap());

    // First-parent walk skips the side branch.
    let walked: Vec<_> = h
        .walk_history(cid(&repo.id("binary")), 0, 100)
        .unwrap()
        .iter()
        .map(|m| repo.label_of(&m.id.to_string()).unwrap().to_string())
        .collect();
    assert_eq!(walked, ["binary", "tests", "merge", "mainline", "rename", "root"]);

    let binary = h.diff_commit(cid(&repo.id("binary"))).unwrap();
    assert_eq!(binary.len(), 1);
    assert!(binary[0].binary);
    assert!(binary[0].hunks.is_empty());
}

#[test]
fn blame_matches_line_history() {
    let layout = blame_layout(&[15, 16, 20]);
    let repo = &layout.repo;
    let h = open_repository(repo.path().to_str().unwrap(), &no_cache()).unwrap();
    let parent = cid(&repo.id("c"));
    let lines: BTreeSet<usize> = [5, 15, 16, 17, 20].into();
    let got: Vec<(usize, String)> = h
        .blame_lines(parent, LEXER_C, &lines)
        .unwrap()
        .into_iter()
        .map(|a| (a.line, repo.label_of(&a.origin.to_string()).unwrap().to_string()))
        .collect();
    let want: Vec<(usize, String)> = [(5, "d"), (15, "c"), (16, "f"), (17, "f"), (20, "g")]
        .into_iter()
        .map(|(l, s)| (l, s.to_string()))
        .collect();
    assert_eq!(got, want);

    let fix_diff = h.diff_commit(cid(&repo.id("fix"))).unwrap();
    assert_eq!(fix_diff[0].removed_lines(), [15, 16, 20].into());

    assert!(matches!(
        h.blame_lines(parent, LEXER_C, &[0].into()),
        Err(Error::LineOutOfRange { .. })
    ));
    assert!(matches!(
        h.blame_lines(parent, LEXER_C, &[999].into()),
        Err(Error::LineOutOfRange { .. })
    ));
    assert!(matches!(
        h.blame_lines(parent, "nope.c", &[1].into()),
        Err(Error::MissingFile { .. })
    ));
}

#[test]
fn commit_times_are_committer_times() {
    let mut b = RepoBuilder::new();
    b.write("a.txt", "1\n");
    b.commit("one", day(3));
    let repo = b.finish();
    let h = open_repository(repo.path().to_str().unwrap(), &no_cache()).unwrap();
    let meta = h.commit_meta(cid(&repo.id("one"))).unwrap();
    assert_eq!(meta.commit_time, day(3));
    assert_eq!(meta.message.trim(), "one");
    assert!(meta.parents.is_empty());
    assert_eq!(h.file_at(meta.id, "a.txt").unwrap().as_deref(), Some(&b"1\n"[..]));
    assert_eq!(h.file_at(meta.id, "b.txt").unwrap(), None);
}
