use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;

use workitem_szz::git::{open_repository, CommitId, RepositoryHandle};
use workitem_szz::szz::{apply_issue_filter, bszz_candidates, select_largest, select_latest};
use workitem_szz_fixtures::{blame_layout, day, insertion_only_layout, FixtureRepo, RepoBuilder};

fn open(repo: &FixtureRepo) -> RepositoryHandle {
    open_repository(repo.path().to_str().unwrap(), &std::env::temp_dir()).unwrap()
}

fn labels(fixture: &FixtureRepo, ids: impl IntoIterator<Item = CommitId>) -> BTreeSet<String> {
    ids.into_iter()
        .map(|id| fixture.label_of(&id.to_string()).unwrap().to_string())
        .collect()
}

/// Per-line origins from the `git` command line, one invocation per line.
fn cli_blame(repo: &Path, rev: &str, file: &str, lines: &[usize]) -> Option<BTreeMap<CommitId, usize>> {
    let mut counts = BTreeMap::new();
    for line in lines {
        let out = Command::new("git")
            .current_dir(repo)
            .args(["blame", "--porcelain", "-L", &format!("{line},{line}"), rev, "--", file])
            .output()
            .ok()?;
        if !out.status.success() {
            return None;
        }
        let text = String::from_utf8(out.stdout).unwrap();
        let id: CommitId = text.split_whitespace().next().unwrap().parse().unwrap();
        *counts.entry(id).or_insert(0) += 1;
    }
    Some(counts)
}

#[test]
fn blame_layout_candidates() {
    let layout = blame_layout(&[15, 16, 20]);
    let fixture = &layout.repo;
    let repo = open(fixture);
    let fc: CommitId = fixture.id("fix").parse().unwrap();
    let set = bszz_candidates(&repo, fc).unwrap();
    assert_eq!(labels(fixture, set.ids()), ["c", "f", "g"].map(String::from).into());
    assert!(!set.contains(fc));

    let filtered = apply_issue_filter(set.clone(), layout.issue_date);
    assert_eq!(labels(fixture, filtered.ids()), ["f", "g"].map(String::from).into());

    // One blamed line each: the newest wins for both selectors.
    assert_eq!(labels(fixture, select_latest(&set)), ["c".to_string()].into());
    assert_eq!(labels(fixture, select_largest(&set)), ["c".to_string()].into());

    if let Some(oracle) = cli_blame(fixture.path(), &fixture.id("c"), workitem_szz_fixtures::LEXER_C, &[15, 16, 20]) {
        let got: BTreeMap<CommitId, usize> = set.candidates().iter().map(|c| (c.commit, c.touched_line_count)).collect();
        assert_eq!(got, oracle);
    }
}

#[test]
fn larger_blame_share_wins_largest() {
    // f owns lines 16 and 17, g owns line 20.
    let layout = blame_layout(&[16, 17, 20]);
    let fixture = &layout.repo;
    let repo = open(fixture);
    let set = bszz_candidates(&repo, fixture.id("fix").parse().unwrap()).unwrap();
    assert_eq!(labels(fixture, select_largest(&set)), ["f".to_string()].into());
}

#[test]
fn insertion_only_fix_has_no_candidates() {
    let fixture = insertion_only_layout().repo;
    let repo = open(&fixture);
    let set = bszz_candidates(&repo, fixture.id("fix").parse().unwrap()).unwrap();
    assert!(set.is_empty());
}

#[test]
fn root_fix_has_no_candidates() {
    let fixture = insertion_only_layout().repo;
    let repo = open(&fixture);
    assert!(bszz_candidates(&repo, fixture.id("base").parse().unwrap()).unwrap().is_empty());
}

#[test]
fn deleting_a_single_origin_file() {
    let mut b = RepoBuilder::new();
    b.write("keep.c", "int keep;\n");
    b.commit("base", day(0));
    b.write("gone.c", "int a;\nint b;\nint c;\n");
    b.commit("origin", day(1));
    b.write("keep.c", "int keep = 1;\n");
    b.commit("other", day(2));
    b.remove("gone.c");
    b.commit("fix", day(3));
    let fixture = b.finish();
    let repo = open(&fixture);
    let set = bszz_candidates(&repo, fixture.id("fix").parse().unwrap()).unwrap();
    assert_eq!(labels(&fixture, set.ids()), ["origin".to_string()].into());
    assert_eq!(set.candidates()[0].touched_line_count, 3);
    if let Some(oracle) = cli_blame(fixture.path(), &fixture.id("other"), "gone.c", &[1, 2, 3]) {
        let got: BTreeMap<CommitId, usize> = set.candidates().iter().map(|c| (c.commit, c.touched_line_count)).collect();
        assert_eq!(got, oracle);
    }
}

#[test]
fn candidates_are_ancestors_of_the_fix() {
    let layout = blame_layout(&[5, 15, 16, 17, 20]);
    let fixture = &layout.repo;
    let repo = open(fixture);
    let fc: CommitId = fixture.id("fix").parse().unwrap();
    let set = bszz_candidates(&repo, fc).unwrap();
    assert_eq!(set.len(), 4);
    for c in set.candidates() {
        assert!(c.commit != fc);
        assert!(repo.is_ancestor(c.commit, fc).unwrap());
        assert_eq!(c.commit_time, repo.commit_meta(c.commit).unwrap().commit_time);
    }
}
