//! Comparison rules: utilitarian greedy, classic Equal Shares with ADD1
//! completion, and continuous sequential Phragmén.

use crate::constraint::Constraint;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Purchase, Removal, RunStats};
use crate::proprank::{better_rho, rho_sweep};

/// Takes candidates by decreasing total utility while they fit the budget.
pub fn run_greedy_pb(election: &Election, budget: u64) -> Outcome {
    let mut order: Vec<usize> = (0..election.num_candidates()).collect();
    order.sort_by(|&a, &b| {
        election
            .utility_sum(b)
            .total_cmp(&election.utility_sum(a))
            .then(election.tie_rank(a).cmp(&election.tie_rank(b)))
    });
    let mut left = budget;
    let mut outcome = Outcome::empty("greedy", election.num_voters());
    for c in order {
        let cost = election.cost(c);
        if cost <= left && election.utility_sum(c) > 0.0 {
            left -= cost;
            outcome.purchases.push(Purchase {
                candidate: c,
                time: None,
                rho: None,
                funded_fraction: 1.0,
                payments: Vec::new(),
            });
        } else {
            outcome.removed.push(Removal {
                candidate: c,
                time: 0.0,
            });
        }
    }
    outcome
}

/// Classic Equal Shares with a fixed per-voter endowment and no constraint
/// other than the money itself.
pub fn mes_with_endowment(election: &Election, endowment: f64) -> Outcome {
    let n = election.num_voters();
    let mut balance = vec![endowment; n];
    let mut remaining: Vec<usize> = (0..election.num_candidates())
        .filter(|&c| !election.supporters(c).is_empty())
        .collect();
    let mut outcome = Outcome::empty("mes-pb", n);
    outcome.has_payments = true;
    let mut buf = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for &c in &remaining {
            buf.clear();
            buf.extend(election.supporters(c).iter().map(|&(i, u)| (balance[i], u)));
            if let Some(rho) = rho_sweep(&mut buf, election.cost(c) as f64) {
                if best.map_or(true, |b| better_rho(election, (rho, c), b)) {
                    best = Some((rho, c));
                }
            }
        }
        let Some((rho, c)) = best else { break };
        let mut payments: Vec<(usize, f64)> = election
            .supporters(c)
            .iter()
            .map(|&(i, u)| (i, balance[i].min(u * rho)))
            .collect();
        payments.sort_by_key(|&(i, _)| i);
        for &(i, p) in &payments {
            balance[i] = (balance[i] - p).max(0.0);
        }
        remaining.retain(|&x| x != c);
        outcome.purchases.push(Purchase {
            candidate: c,
            time: None,
            rho: Some(rho),
            funded_fraction: 1.0,
            payments,
        });
    }
    outcome.unspent = balance;
    outcome
}

fn is_budget_exhaustive(election: &Election, outcome: &Outcome, budget: u64) -> bool {
    let used = outcome.total_cost(election);
    let chosen = outcome.selected();
    (0..election.num_candidates()).all(|c| {
        chosen.contains(&c)
            || election.supporters(c).is_empty()
            || used + election.cost(c) > budget
    })
}

/// Equal Shares with endowment `budget / n`, completed by raising the
/// endowment one unit at a time while the outcome stays within budget.
/// Leftover budget is then filled greedily by total utility; those purchases
/// carry no price.
pub fn run_mes_pb_add1(election: &Election, budget: u64) -> Outcome {
    let n = election.num_voters().max(1);
    let mut endowment = budget as f64 / n as f64;
    let mut best = mes_with_endowment(election, endowment);
    let supported = (0..election.num_candidates())
        .filter(|&c| !election.supporters(c).is_empty())
        .count();
    let limit = election.costs().iter().sum::<u64>() + 2;
    for _ in 0..limit {
        if best.purchases.len() == supported || is_budget_exhaustive(election, &best, budget) {
            break;
        }
        endowment += 1.0;
        let next = mes_with_endowment(election, endowment);
        if next.total_cost(election) > budget {
            break;
        }
        best = next;
    }
    best.rule = "mes-pb".into();
    let mut left = budget.saturating_sub(best.total_cost(election));
    let chosen = best.selected();
    for c in run_greedy_pb(election, u64::MAX).selected() {
        let cost = election.cost(c);
        if cost <= left && !chosen.contains(&c) {
            left -= cost;
            best.purchases.push(Purchase {
                candidate: c,
                time: None,
                rho: None,
                funded_fraction: 1.0,
                payments: Vec::new(),
            });
        }
    }
    let selected = best.selected();
    best.removed = (0..election.num_candidates())
        .filter(|c| !selected.contains(c))
        .map(|candidate| Removal {
            candidate,
            time: 0.0,
        })
        .collect();
    best
}

/// Continuous sequential Phragmén for approval-style utilities.
///
/// Every voter earns money continuously; a candidate is bought as soon as its
/// supporters together hold its cost, and all of them are emptied.
pub fn run_phragmen_approval(election: &Election, constraint: &Constraint) -> Result<Outcome> {
    election.require_supported()?;
    for c in 0..election.num_candidates() {
        let cost = election.cost(c) as f64;
        if election
            .supporters(c)
            .iter()
            .any(|&(_, u)| u != 1.0 && u != cost)
        {
            return Err(Error::contract(format!(
                "sequential Phragmén needs approval utilities; '{}' has other values",
                election.candidate_id(c)
            )));
        }
    }
    let n = election.num_voters();
    let all: Vec<usize> = (0..election.num_candidates()).collect();
    let mut remaining = constraint.available(&[], &all)?;
    let mut outcome = Outcome::empty("phragmen", n);
    outcome.has_payments = true;
    outcome.stats = RunStats {
        executions: 1,
        ..RunStats::default()
    };
    outcome.removed = all
        .iter()
        .filter(|c| !remaining.contains(c))
        .map(|&candidate| Removal { candidate, time: 0.0 })
        .collect();
    outcome
        .removed
        .sort_by_key(|r| election.tie_rank(r.candidate));
    let mut spent = vec![0.0f64; n];
    let mut now = 0.0f64;
    let mut selected = Vec::new();
    while !remaining.is_empty() {
        let ready = |c: usize| -> f64 {
            let sup = election.supporters(c);
            let owed: f64 = sup.iter().map(|&(i, _)| spent[i]).sum();
            ((election.cost(c) as f64 + owed) / sup.len() as f64).max(now)
        };
        let earliest = remaining.iter().map(|&c| ready(c)).fold(f64::INFINITY, f64::min);
        let window = 1e-10 * earliest.abs().max(1.0);
        let mut best: Option<(f64, usize)> = None;
        for &c in &remaining {
            let t = ready(c);
            if t > earliest + window {
                continue;
            }
            let rho = election
                .supporters(c)
                .iter()
                .map(|&(i, u)| (t - spent[i]) / u)
                .fold(0.0, f64::max);
            if best.map_or(true, |b| better_rho(election, (rho, c), b)) {
                best = Some((rho, c));
            }
        }
        let (rho, c) = best.expect("remaining is non-empty");
        now = ready(c);
        let mut payments: Vec<(usize, f64)> = election
            .supporters(c)
            .iter()
            .map(|&(i, _)| (i, now - spent[i]))
            .collect();
        payments.sort_by_key(|&(i, _)| i);
        for &(i, _) in &payments {
            spent[i] = now;
        }
        selected.push(c);
        remaining.retain(|&x| x != c);
        let mut dropped: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&x| !constraint.can_add(&selected, x))
            .collect();
        remaining.retain(|x| !dropped.contains(x));
        dropped.sort_by_key(|&x| election.tie_rank(x));
        outcome
            .removed
            .extend(dropped.into_iter().map(|candidate| Removal { candidate, time: now }));
        outcome.purchases.push(Purchase {
            candidate: c,
            time: Some(now),
            rho: Some(rho),
            funded_fraction: 1.0,
            payments,
        });
    }
    outcome.unspent = spent.iter().map(|&s| now - s).collect();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ConstraintSpec;
    use crate::election::ElectionBuilder;

    #[test]
    fn greedy_skips_what_does_not_fit() {
        let mut b = ElectionBuilder::new();
        b.voter("v").candidate("a", 2).candidate("b", 2).candidate("c", 1);
        b.utility("v", "a", 10.0).utility("v", "b", 9.0).utility("v", "c", 1.0);
        let e = b.build().unwrap();
        assert_eq!(run_greedy_pb(&e, 3).selected(), vec![0, 2]);
        assert!(run_greedy_pb(&e, 0).selected().is_empty());
    }

    #[test]
    fn phragmen_two_voters() {
        let mut b = ElectionBuilder::new();
        b.voter("v1").voter("v2").candidate("a", 1);
        b.utility("v1", "a", 1.0).utility("v2", "a", 1.0);
        let e = b.build().unwrap();
        let con = ConstraintSpec::Unconstrained.compile(&e).unwrap();
        let out = run_phragmen_approval(&e, &con).unwrap();
        assert_eq!(out.purchases[0].time, Some(0.5));
    }

    #[test]
    fn phragmen_rejects_cardinal_utilities() {
        let mut b = ElectionBuilder::new();
        b.voter("v").candidate("a", 2).utility("v", "a", 3.0);
        let e = b.build().unwrap();
        let con = ConstraintSpec::Unconstrained.compile(&e).unwrap();
        assert!(matches!(run_phragmen_approval(&e, &con), Err(Error::Contract(_))));
    }
}
