use std::collections::BTreeSet;

use workitem_szz::git::{open_repository, CommitId, RepositoryHandle};
use workitem_szz::methods::{modified_methods, DiagnosticsLog, MethodExtractor, MethodRef, TestPathPolicy};
use workitem_szz_fixtures::{
    history_shapes, three_functions, work_item_layout, FixtureRepo, ENGINE_PY, MATH_C, MATH_SPANS,
};

fn open(repo: &FixtureRepo) -> RepositoryHandle {
    open_repository(repo.path().to_str().unwrap(), &std::env::temp_dir()).unwrap()
}

fn names(repo: &RepositoryHandle, fixture: &FixtureRepo, label: &str) -> BTreeSet<String> {
    let id: CommitId = fixture.id(label).parse().unwrap();
    modified_methods(repo, id, &TestPathPolicy::default(), &DiagnosticsLog::new())
        .unwrap()
        .methods
        .into_iter()
        .map(|m| m.to_string())
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn edits_inside_bodies_and_deletions() {
    let fixture = three_functions();
    let repo = open(&fixture);
    let f = |name: &str| format!("{MATH_C}#{name}/2");
    assert_eq!(names(&repo, &fixture, "edit3"), set(&[&f("add"), &f("mul"), &f("sub")]));
    // A deleted function is reported through its pre-image span.
    assert_eq!(names(&repo, &fixture, "drop"), set(&[&format!("{MATH_C}#neg/1")]));
    // The root commit adds every function.
    assert_eq!(names(&repo, &fixture, "base").len(), MATH_SPANS.len());
}

#[test]
fn extracted_spans_match_ground_truth() {
    let fixture = three_functions();
    let repo = open(&fixture);
    let content = repo
        .file_at(fixture.id("base").parse().unwrap(), MATH_C)
        .unwrap()
        .unwrap();
    let lang = workitem_szz::methods::Language::from_path(MATH_C).unwrap();
    let spans: Vec<(String, usize, usize)> = workitem_szz::methods::extract_functions(lang, &content)
        .unwrap()
        .functions
        .into_iter()
        .map(|f| (f.qualified_name, f.start_line, f.end_line))
        .collect();
    let want: Vec<(String, usize, usize)> = MATH_SPANS.iter().map(|(n, s, e)| (n.to_string(), *s, *e)).collect();
    assert_eq!(spans, want);
}

#[test]
fn engine_layout_change_sets() {
    let fixture = work_item_layout().repo;
    let repo = open(&fixture);
    let m = |name: &str, arity: usize| MethodRef::new(ENGINE_PY, format!("Engine::{name}"), arity).to_string();
    let all3 = set(&[&m("mx", 2), &m("my", 3), &m("mz", 1)]);
    assert_eq!(names(&repo, &fixture, "a"), all3);
    let mut b = all3.clone();
    b.insert(m("other", 2));
    assert_eq!(names(&repo, &fixture, "b"), b);
    assert_eq!(names(&repo, &fixture, "c"), set(&[&m("my", 3)]));
    assert_eq!(names(&repo, &fixture, "d"), set(&[&m("my", 3), &m("mz", 1)]));
    assert_eq!(names(&repo, &fixture, "e"), set(&[&m("other", 2)]));
}

#[test]
fn tests_merges_and_binaries_contribute_nothing() {
    let fixture = history_shapes();
    let repo = open(&fixture);
    assert!(names(&repo, &fixture, "tests").is_empty());
    assert!(names(&repo, &fixture, "binary").is_empty());
    let merge: CommitId = fixture.id("merge").parse().unwrap();
    let set = modified_methods(&repo, merge, &TestPathPolicy::default(), &DiagnosticsLog::new()).unwrap();
    assert!(set.is_merge);
    assert!(set.methods.is_empty());
}

#[test]
fn custom_policy_can_include_test_code() {
    let fixture = history_shapes();
    let repo = open(&fixture);
    let policy = TestPathPolicy::new(vec![], vec![]).unwrap();
    let id: CommitId = fixture.id("tests").parse().unwrap();
    let got = modified_methods(&repo, id, &policy, &DiagnosticsLog::new()).unwrap();
    let names: Vec<String> = got.methods.iter().map(|m| m.to_string()).collect();
    assert_eq!(names, ["tests/test_foo.py#test_foo/0"]);
}

#[test]
fn extractor_caches_change_sets() {
    let fixture = three_functions();
    let repo = open(&fixture);
    let extractor = MethodExtractor::default();
    let id: CommitId = fixture.id("edit3").parse().unwrap();
    let first = extractor.modified_methods(&repo, id).unwrap();
    let second = extractor.modified_methods(&repo, id).unwrap();
    assert!(std::sync::Arc::ptr_eq(&first, &second));
    assert_eq!(extractor.cache().len(), 1);
}
