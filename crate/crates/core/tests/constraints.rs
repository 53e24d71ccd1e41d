mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use propselect::constraint::{Constraint, ConstraintSpec};
use propselect::Error;

fn unit_election(m: usize) -> propselect::Election {
    common::from_matrix(&vec![1; m], &[vec![1; m]])
}

fn feasible(con: &Constraint, set: &[usize]) -> bool {
    con.is_feasible(set)
}

#[test]
fn budget_side_file() {
    let e = common::from_matrix(&[2, 3, 4], &[vec![1, 1, 1]]);
    let spec = ConstraintSpec::from_json(r#"{"kind": "budget", "budget": 5}"#).unwrap();
    let con = spec.compile(&e).unwrap();
    assert!(feasible(&con, &[0, 1]));
    assert!(!feasible(&con, &[1, 2]));
    assert_eq!(con.budget(), Some(5));
    assert!(!con.is_matroid());
}

#[test]
fn cardinality_side_file() {
    let e = unit_election(4);
    let con = ConstraintSpec::from_json(r#"{"kind": "cardinality", "k": 2}"#)
        .unwrap()
        .compile(&e)
        .unwrap();
    assert!(feasible(&con, &[0, 3]));
    assert!(!feasible(&con, &[0, 1, 2]));
    assert!(con.is_matroid());
}

#[test]
fn cardinality_rejects_non_unit_costs() {
    let e = common::from_matrix(&[1, 2], &[vec![1, 1]]);
    let err = ConstraintSpec::Cardinality { k: 1 }.compile(&e).unwrap_err();
    assert!(matches!(err, Error::Contract(_)));
}

#[test]
fn partition_side_file() {
    let e = unit_election(4);
    let json = r#"{"kind": "partition_matroid", "groups": [
        {"members": ["c1", "c2"], "cap": 1},
        {"members": ["c3"], "cap": 0}
    ]}"#;
    let con = ConstraintSpec::from_json(json).unwrap().compile(&e).unwrap();
    assert!(feasible(&con, &[0, 3]));
    assert!(!feasible(&con, &[0, 1]));
    assert!(!feasible(&con, &[2]));
    assert!(con.is_matroid());
}

#[test]
fn partition_rejects_overlapping_groups() {
    let e = unit_election(2);
    let json = r#"{"kind": "partition_matroid", "groups": [
        {"members": ["c1"], "cap": 1}, {"members": ["c1", "c2"], "cap": 1}
    ]}"#;
    let err = ConstraintSpec::from_json(json).unwrap().compile(&e).unwrap_err();
    assert!(matches!(err, Error::Input(_)));
}

#[test]
fn exclusion_side_file() {
    let e = common::from_matrix(&[1, 5, 2], &[vec![1, 1, 1]]);
    let json = r#"{"kind": "exclusion_pairs", "pairs": [["c1", "c2"]]}"#;
    let con = ConstraintSpec::from_json(json).unwrap().compile(&e).unwrap();
    assert!(feasible(&con, &[0, 2]));
    assert!(!feasible(&con, &[1, 0]));
    assert!(con.can_add(&[0], 2));
    assert!(!con.can_add(&[0], 1));
    assert_eq!(con.available(&[0], &[1, 2]).unwrap(), vec![2]);
}

#[test]
fn exclusion_rejects_self_pair_and_unknown_ids() {
    let e = unit_election(2);
    let same = ConstraintSpec::ExclusionPairs {
        pairs: vec![("c1".into(), "c1".into())],
    };
    assert!(same.compile(&e).is_err());
    let unknown = ConstraintSpec::ExclusionPairs {
        pairs: vec![("c1".into(), "nope".into())],
    };
    assert!(unknown.compile(&e).is_err());
}

#[test]
fn explicit_family_side_file() {
    let e = unit_election(3);
    let json = r#"{"kind": "explicit_family", "sets": [[], ["c1"], ["c2"], ["c1", "c2"], ["c3"]]}"#;
    let con = ConstraintSpec::from_json(json).unwrap().compile(&e).unwrap();
    assert!(feasible(&con, &[1, 0]));
    assert!(!feasible(&con, &[0, 2]));
}

#[test]
fn explicit_family_must_be_downward_closed() {
    let e = unit_election(2);
    let spec = ConstraintSpec::ExplicitFamily {
        sets: vec![vec![], vec!["c1".into(), "c2".into()]],
    };
    assert!(matches!(spec.compile(&e), Err(Error::Input(_))));
    let no_empty = Constraint::family(BTreeSet::from([vec![0]]));
    assert!(no_empty.is_err());
}

#[test]
fn family_closure_adds_all_subsets() {
    let closed = ConstraintSpec::family_closure(&[vec!["b".into(), "a".into()], vec!["c".into()]]);
    let expected: Vec<Vec<String>> = vec![
        vec![],
        vec!["a".into()],
        vec!["a".into(), "b".into()],
        vec!["b".into()],
        vec!["c".into()],
    ];
    assert_eq!(closed, expected);
    let e = unit_election(3);
    let spec = ConstraintSpec::ExplicitFamily {
        sets: closed
            .into_iter()
            .map(|s| s.into_iter().map(|x| format!("c{}", (x.as_bytes()[0] - b'a') + 1)).collect())
            .collect(),
    };
    assert!(spec.compile(&e).is_ok());
}

#[test]
fn conjunction_side_file() {
    let e = common::from_matrix(&[1, 2, 3], &[vec![1, 1, 1]]);
    let json = r#"{"kind": "conjunction", "parts": [
        {"kind": "budget", "budget": 4},
        {"kind": "exclusion_pairs", "pairs": [["c1", "c3"]]}
    ]}"#;
    let con = ConstraintSpec::from_json(json).unwrap().compile(&e).unwrap();
    assert!(feasible(&con, &[0, 1]));
    assert!(!feasible(&con, &[0, 2]));
    assert!(!feasible(&con, &[1, 2]));
    assert_eq!(con.budget(), None);
}

#[test]
fn spec_json_round_trip() {
    let spec = ConstraintSpec::Conjunction {
        parts: vec![
            ConstraintSpec::Budget { budget: 9 },
            ConstraintSpec::ExclusionPairs {
                pairs: vec![("x".into(), "y".into())],
            },
        ],
    };
    assert_eq!(ConstraintSpec::from_json(&spec.to_json()).unwrap(), spec);
}

#[test]
fn predicate_downward_closure_check() {
    let closed = Constraint::predicate(|s: &[usize]| s.len() <= 2);
    assert!(closed.check_downward_closed(4).unwrap());
    let broken = Constraint::predicate(|s: &[usize]| s.len() != 1);
    assert!(!broken.check_downward_closed(3).unwrap());
}

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << m).map(move |mask| (0..m).filter(|&j| mask >> j & 1 == 1).collect())
}

fn arb_spec(m: usize) -> impl Strategy<Value = (Vec<u64>, ConstraintSpec)> {
    let ids = move |c: usize| format!("c{}", c + 1);
    prop_oneof![
        (prop::collection::vec(1u64..6, m), 0u64..15)
            .prop_map(|(costs, budget)| (costs, ConstraintSpec::Budget { budget })),
        (0usize..=m).prop_map(move |k| (vec![1; m], ConstraintSpec::Cardinality { k })),
        (prop::collection::vec(0usize..3, m), prop::collection::vec(0usize..3, 3)).prop_map(
            move |(group, caps)| {
                let groups = (0..3)
                    .map(|g| propselect::constraint::PartitionGroup {
                        members: (0..m).filter(|&c| group[c] == g).map(ids).collect(),
                        cap: caps[g],
                    })
                    .collect();
                (vec![1; m], ConstraintSpec::PartitionMatroid { groups })
            }
        ),
        (
            prop::collection::vec(1u64..4, m),
            prop::collection::vec((0..m, 0..m), 0..5)
        )
            .prop_map(move |(costs, raw)| {
                let pairs = raw
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| (ids(a), ids(b)))
                    .collect();
                (costs, ConstraintSpec::ExclusionPairs { pairs })
            }),
    ]
}

proptest! {
    #[test]
    fn compiled_constraints_are_downward_closed((costs, spec) in arb_spec(5)) {
        let e = common::from_matrix(&costs, &[vec![1; 5]]);
        let con = spec.compile(&e).unwrap();
        prop_assert!(con.check_downward_closed(5).unwrap());
        prop_assert!(con.is_feasible(&[]));
        for set in subsets(5) {
            if con.is_feasible(&set) {
                for skip in 0..set.len() {
                    let mut sub = set.clone();
                    sub.remove(skip);
                    prop_assert!(con.is_feasible(&sub));
                }
            }
        }
    }

    #[test]
    fn can_add_matches_feasibility((costs, spec) in arb_spec(5), base in prop::collection::btree_set(0usize..5, 0..4)) {
        let e = common::from_matrix(&costs, &[vec![1; 5]]);
        let con = spec.compile(&e).unwrap();
        let base: Vec<usize> = base.into_iter().collect();
        prop_assume!(con.is_feasible(&base));
        for c in (0..5).filter(|c| !base.contains(c)) {
            let mut bigger = base.clone();
            bigger.push(c);
            prop_assert_eq!(con.can_add(&base, c), con.is_feasible(&bigger));
        }
    }

    #[test]
    fn budget_feasibility_matches_cost_sum(costs in prop::collection::vec(1u64..9, 5), budget in 0u64..30) {
        let e = common::from_matrix(&costs, &[vec![1; 5]]);
        let con = ConstraintSpec::Budget { budget }.compile(&e).unwrap();
        for set in subsets(5) {
            let total: u64 = set.iter().map(|&c| costs[c]).sum();
            prop_assert_eq!(con.is_feasible(&set), total <= budget);
        }
    }
}

#[test]
fn documented_side_files_compile() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/constraints");
    let e = common::from_matrix(&[1; 5], &[vec![1; 5]]);
    let mut kinds = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let spec = ConstraintSpec::from_json(&text).unwrap();
        spec.compile(&e).unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        kinds += 1;
    }
    assert_eq!(kinds, 7);
}
