use super::{AxiomKind, AxiomReport, Witness};
use crate::election::Election;

/// Polynomial EJR+ up-to-one check for budget constraints.
///
/// A candidate `c ∉ W` witnesses a violation when some `s` supporters, each
/// with `u_i(W) + u_i(c) < s·b/n`, could jointly afford it (`n·cost(c) ≤ s·b`).
/// Taking the `s` supporters with the smallest such values is optimal, so each
/// candidate needs a single sorted scan. Violations are counted per candidate.
pub fn check_ejr_plus_up_to_one(election: &Election, budget: u64, w: &[usize]) -> AxiomReport {
    let n = election.num_voters() as f64;
    let b = budget as f64;
    let sat: Vec<f64> = (0..election.num_voters())
        .map(|i| election.satisfaction(i, w))
        .collect();
    let mut violations = Vec::new();
    for c in 0..election.num_candidates() {
        if w.contains(&c) {
            continue;
        }
        let cost = election.cost(c) as f64;
        let mut values: Vec<(f64, usize)> = election
            .supporters(c)
            .iter()
            .map(|&(i, u)| (sat[i] + u, i))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for s in 1..=values.len() {
            let share = s as f64 * b;
            let (v, _) = values[s - 1];
            if n * cost <= share && v * n < share {
                violations.push(Witness {
                    group: values[..s].iter().map(|&(_, i)| i).collect(),
                    alpha: share / n,
                    beta: None,
                    agreed: vec![c],
                    achieved: v,
                    required: share / n,
                    candidate: Some(c),
                    prefix: None,
                });
                break;
            }
        }
    }
    AxiomReport {
        axiom: AxiomKind::EjrPlusUpToOne,
        violations,
        checked_groups: election.num_candidates() - w.len().min(election.num_candidates()),
    }
}
