#![allow(dead_code)]

use proptest::prelude::*;

use propselect::election::{Election, ElectionBuilder};

/// Builds an election from a dense utility matrix (`rows[i][c]`, zero = unsupported).
pub fn from_matrix(costs: &[u64], rows: &[Vec<u32>]) -> Election {
    let mut b = ElectionBuilder::new();
    for i in 0..rows.len() {
        b.voter(format!("v{}", i + 1));
    }
    for (c, &cost) in costs.iter().enumerate() {
        b.candidate(format!("c{}", c + 1), cost);
    }
    for (i, row) in rows.iter().enumerate() {
        for (c, &u) in row.iter().enumerate() {
            if u > 0 {
                b.utility(format!("v{}", i + 1), format!("c{}", c + 1), u as f64);
            }
        }
    }
    b.build().unwrap()
}

/// Dense matrix with every column given at least one supporter.
fn fix_support(mut rows: Vec<Vec<u32>>, m: usize) -> Vec<Vec<u32>> {
    for c in 0..m {
        if rows.iter().all(|r| r[c] == 0) {
            let i = c % rows.len();
            rows[i][c] = 1;
        }
    }
    rows
}

/// Random elections with every candidate supported.
pub fn arb_election(
    max_n: usize,
    max_m: usize,
    max_u: u32,
    max_cost: u64,
) -> impl Strategy<Value = Election> {
    (1..=max_n, 1..=max_m).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(1..=max_cost, m),
            prop::collection::vec(prop::collection::vec(0..=max_u, m), n),
        )
            .prop_map(move |(costs, rows)| from_matrix(&costs, &fix_support(rows, m)))
    })
}

/// Random elections with unit costs.
pub fn arb_unit_election(max_n: usize, max_m: usize, max_u: u32) -> impl Strategy<Value = Election> {
    arb_election(max_n, max_m, max_u, 1)
}

/// Random approval elections (utility one per approval).
pub fn arb_approval_election(max_n: usize, max_m: usize, max_cost: u64) -> impl Strategy<Value = Election> {
    arb_election(max_n, max_m, 1, max_cost)
}
