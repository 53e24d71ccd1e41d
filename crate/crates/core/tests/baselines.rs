mod common;

use common::{arb_approval_election, from_matrix};
use proptest::prelude::*;

use propselect::baselines::{mes_with_endowment, run_greedy_pb, run_mes_pb_add1, run_phragmen_approval};
use propselect::constraint::ConstraintSpec;
use propselect::outcome::audit;
use propselect::proprank::{run_proprank, ProprankConfig};
use propselect::Error;

fn ids(e: &propselect::Election, w: &[usize]) -> Vec<String> {
    w.iter().map(|&c| e.candidate_id(c).to_string()).collect()
}

#[test]
fn greedy_skips_what_no_longer_fits() {
    // totals: c1 = 10, c2 = 9, c3 = 1
    let e = from_matrix(&[2, 2, 1], &[vec![5, 5, 1], vec![5, 4, 0]]);
    let out = run_greedy_pb(&e, 3);
    assert_eq!(ids(&e, &out.selected()), ["c1", "c3"]);
    assert!(!out.has_payments);
    let con = ConstraintSpec::Budget { budget: 3 }.compile(&e).unwrap();
    assert!(audit(&e, &con, &out).is_empty());
}

#[test]
fn greedy_budget_extremes() {
    let e = from_matrix(&[2, 2, 1], &[vec![5, 5, 1], vec![5, 4, 0]]);
    assert!(run_greedy_pb(&e, 0).selected().is_empty());
    assert_eq!(ids(&e, &run_greedy_pb(&e, 100).selected()), ["c1", "c2", "c3"]);
}

#[test]
fn mes_pb_gives_each_bloc_a_project() {
    // two unanimous blocs of two voters, each bloc with two projects
    let rows = vec![
        vec![1, 1, 0, 0],
        vec![1, 1, 0, 0],
        vec![0, 0, 1, 1],
        vec![0, 0, 1, 1],
    ];
    let e = from_matrix(&[1, 1, 1, 1], &rows);
    let out = run_mes_pb_add1(&e, 2);
    let mut w = ids(&e, &out.selected());
    w.sort();
    assert_eq!(w, ["c1", "c3"]);
    let con = ConstraintSpec::Budget { budget: 2 }.compile(&e).unwrap();
    assert!(audit(&e, &con, &out).is_empty());
}

#[test]
fn mes_pb_with_ample_budget_takes_everything() {
    let e = from_matrix(&[3, 1, 2], &[vec![1, 0, 2], vec![0, 4, 1]]);
    let out = run_mes_pb_add1(&e, 6);
    assert_eq!(out.selected().len(), 3);
}

#[test]
fn mes_with_endowment_splits_cost_evenly() {
    let e = from_matrix(&[2], &[vec![1], vec![1]]);
    let out = mes_with_endowment(&e, 1.0);
    assert_eq!(out.purchases.len(), 1);
    for &(_, paid) in &out.purchases[0].payments {
        assert!((paid - 1.0).abs() < 1e-12);
    }
    assert!(mes_with_endowment(&e, 0.9).purchases.is_empty());
}

#[test]
fn phragmen_two_approvers_buy_at_half() {
    let e = from_matrix(&[1], &[vec![1], vec![1]]);
    let con = ConstraintSpec::Unconstrained.compile(&e).unwrap();
    let out = run_phragmen_approval(&e, &con).unwrap();
    assert!((out.purchases[0].time.unwrap() - 0.5).abs() < 1e-12);
    for &(_, paid) in &out.purchases[0].payments {
        assert!((paid - 0.5).abs() < 1e-12);
    }
}

#[test]
fn phragmen_larger_bloc_goes_first() {
    let rows = vec![vec![1, 0], vec![1, 0], vec![1, 0], vec![0, 1]];
    let e = from_matrix(&[1, 1], &rows);
    let con = ConstraintSpec::Cardinality { k: 2 }.compile(&e).unwrap();
    let out = run_phragmen_approval(&e, &con).unwrap();
    assert_eq!(ids(&e, &out.selected()), ["c1", "c2"]);
    assert!((out.purchases[0].time.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((out.purchases[1].time.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn phragmen_single_voter_waits_for_cost() {
    let e = from_matrix(&[7], &[vec![1]]);
    let con = ConstraintSpec::Unconstrained.compile(&e).unwrap();
    let out = run_phragmen_approval(&e, &con).unwrap();
    assert!((out.purchases[0].time.unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn phragmen_refuses_cardinal_utilities() {
    let e = from_matrix(&[1, 1], &[vec![2, 1], vec![1, 3]]);
    let con = ConstraintSpec::Unconstrained.compile(&e).unwrap();
    assert!(matches!(run_phragmen_approval(&e, &con), Err(Error::Contract(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn phragmen_agrees_with_proprank_on_approval(
        e in arb_approval_election(8, 6, 4),
        frac in 0.0f64..=1.0,
    ) {
        let total: u64 = e.costs().iter().sum();
        let budget = (frac * total as f64).round() as u64;
        let con = ConstraintSpec::Budget { budget }.compile(&e).unwrap();
        let reference = run_phragmen_approval(&e, &con).unwrap();
        prop_assert!(audit(&e, &con, &reference).is_empty());
        for kappa in [0.0, 1.0] {
            let cfg = ProprankConfig { kappa, ..ProprankConfig::default() };
            let ours = run_proprank(&e, &con, &cfg).unwrap();
            prop_assert_eq!(ours.selected(), reference.selected());
        }
    }

    #[test]
    fn greedy_and_mes_pb_stay_within_budget(
        e in common::arb_election(8, 7, 5, 6),
        frac in 0.0f64..=1.0,
    ) {
        let total: u64 = e.costs().iter().sum();
        let budget = (frac * total as f64).round() as u64;
        let con = ConstraintSpec::Budget { budget }.compile(&e).unwrap();
        for out in [run_greedy_pb(&e, budget), run_mes_pb_add1(&e, budget)] {
            let problems = audit(&e, &con, &out);
            prop_assert!(problems.is_empty(), "{:?}", problems);
        }
    }
}
