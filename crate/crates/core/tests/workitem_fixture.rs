use std::collections::BTreeSet;

use proptest::prelude::*;
use workitem_szz::git::{open_repository, CommitId};
use workitem_szz::methods::{MethodChangeSet, MethodExtractor, MethodRef};
use workitem_szz::predict::mine_tracking_matrix;
use workitem_szz::workitem::{
    build_tracking_matrix, detect_work_items, select_bic_candidate, Factor, TimedChangeSet,
};
use workitem_szz_fixtures::work_item_layout;

fn labels(fixture: &workitem_szz_fixtures::FixtureRepo, ids: impl IntoIterator<Item = CommitId>) -> Vec<String> {
    ids.into_iter()
        .map(|id| fixture.label_of(&id.to_string()).unwrap().to_string())
        .collect()
}

#[test]
fn mined_matrix_reproduces_the_layout() {
    let layout = work_item_layout();
    let fixture = &layout.repo;
    let repo = open_repository(fixture.path().to_str().unwrap(), &std::env::temp_dir()).unwrap();
    let fc: CommitId = fixture.id("a").parse().unwrap();
    let matrix = mine_tracking_matrix(&repo, &MethodExtractor::default(), fc, 0, 1000).unwrap();

    let rows: Vec<(String, String)> = matrix
        .rows
        .iter()
        .map(|r| {
            (
                fixture.label_of(&r.commit.to_string()).unwrap().to_string(),
                r.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            )
        })
        .collect();
    let want: Vec<(String, String)> = [
        ("a", "111"),
        ("b", "111"),
        ("c", "010"),
        ("d", "011"),
        ("e", "000"),
        ("f", "111"),
        ("g", "111"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    assert_eq!(rows, want);

    let half = detect_work_items(&matrix, Factor::new(0.5).unwrap());
    assert_eq!(labels(fixture, half.items.iter().map(|w| w.commit)), ["a", "b", "d", "f", "g"]);
    let seventy = detect_work_items(&matrix, Factor::new(0.7).unwrap());
    assert_eq!(labels(fixture, seventy.items.iter().map(|w| w.commit)), ["a", "b", "f", "g"]);
    let bic = select_bic_candidate(&seventy, layout.issue_date, 30).unwrap();
    assert_eq!(labels(fixture, [bic]), ["f"]);
}

fn brute_force_cell(history: &MethodChangeSet, method: &MethodRef) -> bool {
    history.methods.iter().any(|m| m == method)
}

fn arb_history() -> impl Strategy<Value = (Vec<usize>, Vec<(Vec<usize>, bool, i64)>)> {
    (
        proptest::collection::btree_set(0usize..12, 1..=10).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
        proptest::collection::vec(
            (proptest::collection::vec(0usize..12, 0..8), proptest::bool::weighted(0.1), 0i64..20),
            0..40,
        ),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn matrix_cells_match_set_membership((fc_methods, history) in arb_history()) {
        let method = |i: usize| MethodRef::new(format!("f{}.c", i % 3), format!("m{i}"), i % 2);
        let fc = MethodChangeSet::new(CommitId::from_bytes([255; 20]), fc_methods.iter().map(|&i| method(i)));
        let sets: Vec<MethodChangeSet> = history
            .iter()
            .enumerate()
            .map(|(n, (ms, merge, _))| {
                let id = CommitId::from_bytes([n as u8; 20]);
                if *merge { MethodChangeSet::merge(id) } else { MethodChangeSet::new(id, ms.iter().map(|&i| method(i))) }
            })
            .collect();
        let timed: Vec<TimedChangeSet<'_>> = sets
            .iter()
            .zip(&history)
            .map(|(s, (_, _, t))| TimedChangeSet { changes: s, commit_time: *t })
            .collect();
        let matrix = build_tracking_matrix(&fc, &timed).unwrap();

        let mut columns: Vec<MethodRef> = fc.methods.iter().cloned().collect();
        columns.sort_by(|a, b| (&a.file, &a.qualified_name, a.arity).cmp(&(&b.file, &b.qualified_name, b.arity)));
        prop_assert_eq!(&matrix.columns, &columns);

        let expected_rows: BTreeSet<CommitId> = sets.iter().filter(|s| !s.is_merge).map(|s| s.commit).collect();
        let got_rows: BTreeSet<CommitId> = matrix.rows.iter().map(|r| r.commit).collect();
        prop_assert_eq!(got_rows, expected_rows);

        for pair in matrix.rows.windows(2) {
            prop_assert!((pair[0].commit_time, pair[0].commit) > (pair[1].commit_time, pair[1].commit));
        }
        for row in &matrix.rows {
            let source = sets.iter().find(|s| s.commit == row.commit).unwrap();
            for (j, col) in columns.iter().enumerate() {
                prop_assert_eq!(row.bits[j], brute_force_cell(source, col));
            }
        }
    }
}
