mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use propselect::election::{
    compare_ids, derive_cost_utilities, validate_election, Election, ElectionBuilder, RawCandidate,
    RawElection, Violation,
};
use propselect::Error;

fn raw(voters: &[&str], candidates: &[(&str, i64)], utilities: &[(&str, &str, f64)]) -> RawElection {
    let mut map: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for &(v, c, u) in utilities {
        map.entry(v.to_string()).or_default().insert(c.to_string(), u);
    }
    RawElection {
        voters: voters.iter().map(|s| s.to_string()).collect(),
        candidates: candidates
            .iter()
            .map(|&(id, cost)| RawCandidate {
                id: id.to_string(),
                cost,
            })
            .collect(),
        utilities: map,
    }
}

#[test]
fn numeric_ids_sort_naturally() {
    let mut ids = vec!["c10", "c2", "c1", "b", "c02"];
    ids.sort_by(|a, b| compare_ids(a, b));
    assert_eq!(ids.first(), Some(&"b"));
    assert!(ids.iter().position(|&x| x == "c2") < ids.iter().position(|&x| x == "c10"));
}

#[test]
fn validation_lists_each_problem() {
    let r = raw(
        &["v1", "v1"],
        &[("a", 0), ("b", 2), ("b", 1), ("lonely", 3)],
        &[("v1", "a", -1.0), ("v1", "b", f64::NAN), ("ghost", "b", 1.0), ("v1", "zzz", 1.0)],
    );
    let report = validate_election(&r);
    assert!(!report.is_ok());
    let has = |pred: &dyn Fn(&Violation) -> bool| report.violations.iter().any(pred);
    assert!(has(&|v| matches!(v, Violation::DuplicateVoter { .. })));
    assert!(has(&|v| matches!(v, Violation::DuplicateCandidate { .. })));
    assert!(has(&|v| matches!(v, Violation::NonpositiveCost { .. })));
    assert!(has(&|v| matches!(v, Violation::NegativeUtility { .. })));
    assert!(has(&|v| matches!(v, Violation::NonfiniteUtility { .. })));
    assert!(has(&|v| matches!(v, Violation::UnknownVoter { .. })));
    assert!(has(&|v| matches!(v, Violation::UnknownCandidate { .. })));
    assert!(has(&|v| matches!(v, Violation::UnsupportedCandidate { .. })));
}

#[test]
fn valid_election_passes_validation() {
    let r = raw(&["v1"], &[("a", 3)], &[("v1", "a", 2.0)]);
    assert!(validate_election(&r).is_ok());
    let e = Election::from_raw(&r).unwrap();
    assert_eq!(e.num_voters(), 1);
    assert_eq!(e.cost(0), 3);
    assert_eq!(e.utility(0, 0), 2.0);
}

#[test]
fn builder_rejects_bad_input() {
    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 0);
    assert!(matches!(b.build(), Err(Error::Input(_))));

    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 1).utility("v", "a", -2.0);
    assert!(matches!(b.build(), Err(Error::Input(_))));

    let mut b = ElectionBuilder::new();
    b.voter("v").voter("v").candidate("a", 1);
    assert!(matches!(b.build(), Err(Error::Input(_))));

    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 1).utility("w", "a", 1.0);
    assert!(matches!(b.build(), Err(Error::Input(_))));
}

#[test]
fn unsupported_candidates_are_kept_but_flagged() {
    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 1).candidate("b", 1).utility("v", "a", 1.0);
    let e = b.build().unwrap();
    assert_eq!(e.unsupported_candidates(), vec![1]);
    assert!(matches!(e.require_supported(), Err(Error::Contract(_))));
}

#[test]
fn cost_utilities_copy_costs() {
    let mut approvals = BTreeMap::new();
    approvals.insert("v1".to_string(), BTreeSet::from(["p".to_string()]));
    let costs = BTreeMap::from([("p".to_string(), 7u64)]);
    let utilities = derive_cost_utilities(&approvals, &costs).unwrap();
    assert_eq!(utilities["v1"]["p"], 7.0);

    approvals.insert("v2".to_string(), BTreeSet::from(["q".to_string()]));
    assert!(derive_cost_utilities(&approvals, &costs).is_err());
}

#[test]
fn supporters_ascend_by_utility() {
    let e = common::from_matrix(&[1], &[vec![3], vec![1], vec![2], vec![1]]);
    let utils: Vec<f64> = e.supporters(0).iter().map(|&(_, u)| u).collect();
    assert_eq!(utils, vec![1.0, 1.0, 2.0, 3.0]);
    let voters: Vec<usize> = e.supporters(0).iter().map(|&(i, _)| i).collect();
    assert_eq!(voters, vec![1, 3, 2, 0]);
    assert_eq!(e.u_max(), 3.0);
    assert_eq!(e.utility_sum(0), 7.0);
}

#[test]
fn unit_approval_detection() {
    assert!(common::from_matrix(&[1, 1], &[vec![1, 0], vec![1, 1]]).is_unit_approval());
    assert!(common::from_matrix(&[2, 1], &[vec![1, 0], vec![1, 1]]).is_unit_approval());
    assert!(!common::from_matrix(&[1, 1], &[vec![2, 0], vec![1, 1]]).is_unit_approval());
}

proptest! {
    #[test]
    fn raw_round_trip(e in common::arb_election(6, 6, 4, 5)) {
        let back = Election::from_raw(&e.to_raw()).unwrap();
        prop_assert_eq!(back.to_raw(), e.to_raw());
        let json = serde_json::to_string(&e.to_raw()).unwrap();
        let parsed: RawElection = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parsed, e.to_raw());
    }

    #[test]
    fn satisfaction_is_additive(e in common::arb_election(5, 6, 4, 3), split in 0usize..6) {
        let all: Vec<usize> = (0..e.num_candidates()).collect();
        let (left, right) = all.split_at(split.min(all.len()));
        for i in 0..e.num_voters() {
            let whole = e.satisfaction(i, &all);
            let parts = e.satisfaction(i, left) + e.satisfaction(i, right);
            prop_assert!((whole - parts).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_multiplies_utilities(e in common::arb_election(4, 4, 4, 3), factor in 0.5f64..4.0) {
        let s = e.scaled(factor).unwrap();
        for i in 0..e.num_voters() {
            for c in 0..e.num_candidates() {
                prop_assert!((s.utility(i, c) - factor * e.utility(i, c)).abs() < 1e-9);
            }
        }
    }
}
