//! Method of Equal Shares for arbitrary downward-closed constraints.
//!
//! The main loop looks for the largest per-voter entitlement `t` such that an
//! Equal Shares run with foresight, started from the committed spending, still
//! produces a set that is feasible together with the committed selection.

use crate::constraint::Constraint;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Purchase, Removal, RunStats};
use crate::proprank::{better_rho, cap, check_kappa, rho_sweep, scalings_into};
use crate::search::{latest_true, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesConfig {
    pub kappa: f64,
    pub search: SearchConfig,
}

impl Default for MesConfig {
    fn default() -> Self {
        MesConfig {
            kappa: 1.0,
            search: SearchConfig::default(),
        }
    }
}

/// Best payment-per-utility over `pool` if every voter had unlimited money.
pub fn rho_best(election: &Election, pool: &[usize]) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::contract("rho_best of an empty pool"));
    }
    Ok(pool
        .iter()
        .map(|&c| election.cost(c) as f64 / election.utility_sum(c))
        .fold(f64::INFINITY, f64::min))
}

/// Cap used by the subroutine: the larger of the foresight cap and the
/// efficiency cap `min(rho_best · u · (1 + κ), p)`.
pub fn mes_cap(p: f64, u: f64, lambda: f64, kappa: f64, rho_best_val: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::contract("caps are only defined for positive utility"));
    }
    if !(rho_best_val > 0.0) {
        return Err(Error::contract("rho_best must be positive"));
    }
    check_kappa(kappa)?;
    Ok(mes_cap_unchecked(p, u, lambda, kappa, rho_best_val))
}

#[inline]
fn mes_cap_unchecked(p: f64, u: f64, lambda: f64, kappa: f64, rho_best_val: f64) -> f64 {
    let x = cap(p, u, lambda, kappa);
    let y = (rho_best_val * u * (1.0 + kappa)).min(p);
    x.max(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubroutinePurchase {
    pub candidate: usize,
    pub rho: f64,
    pub payments: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubroutineResult {
    pub purchases: Vec<SubroutinePurchase>,
    /// Largest local scaling factor after the last purchase.
    pub final_max_scaling: f64,
}

/// Equal Shares with foresight from entitlement `t`, spending from a local copy of
/// the balances. Feasibility is not consulted.
pub fn equal_shares_subroutine(
    election: &Election,
    spent: &[f64],
    t: f64,
    pool: &[usize],
    kappa: f64,
) -> Result<SubroutineResult> {
    check_kappa(kappa)?;
    if let Some(&c) = pool.iter().find(|&&c| election.supporters(c).is_empty()) {
        return Err(Error::contract(format!(
            "candidate '{}' has no supporter",
            election.candidate_id(c)
        )));
    }
    Ok(subroutine(election, spent, t, pool, kappa))
}

fn subroutine(
    election: &Election,
    spent: &[f64],
    t: f64,
    pool: &[usize],
    kappa: f64,
) -> SubroutineResult {
    let n = election.num_voters();
    let mut balance: Vec<f64> = spent.iter().map(|&s| (t - s).max(0.0)).collect();
    let mut remaining = pool.to_vec();
    let mut purchases = Vec::new();
    let mut lambda = vec![0.0; n];
    let mut buf = Vec::new();
    loop {
        if remaining.is_empty() {
            break;
        }
        lambda.iter_mut().for_each(|l| *l = 0.0);
        scalings_into(election, &balance, remaining.iter().copied(), &mut lambda);
        let best_ratio = remaining
            .iter()
            .map(|&c| election.cost(c) as f64 / election.utility_sum(c))
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(f64, usize)> = None;
        for &c in &remaining {
            buf.clear();
            for &(i, u) in election.supporters(c) {
                buf.push((mes_cap_unchecked(balance[i], u, lambda[i], kappa, best_ratio), u));
            }
            if let Some(rho) = rho_sweep(&mut buf, election.cost(c) as f64) {
                if best.map_or(true, |b| better_rho(election, (rho, c), b)) {
                    best = Some((rho, c));
                }
            }
        }
        let Some((rho, c)) = best else { break };
        let mut payments = Vec::new();
        for &(i, u) in election.supporters(c) {
            let x = mes_cap_unchecked(balance[i], u, lambda[i], kappa, best_ratio);
            let pay = x.min(u * rho);
            balance[i] = (balance[i] - pay).max(0.0);
            payments.push((i, pay));
        }
        payments.sort_by_key(|&(i, _)| i);
        purchases.push(SubroutinePurchase {
            candidate: c,
            rho,
            payments,
        });
        remaining.retain(|&x| x != c);
    }
    let final_max_scaling = if remaining.is_empty() {
        0.0
    } else {
        lambda.iter_mut().for_each(|l| *l = 0.0);
        scalings_into(election, &balance, remaining.iter().copied(), &mut lambda);
        lambda.iter().copied().fold(0.0, f64::max)
    };
    SubroutineResult {
        purchases,
        final_max_scaling,
    }
}

/// Runs the general Method of Equal Shares.
pub fn run_mes_general(
    election: &Election,
    constraint: &Constraint,
    config: &MesConfig,
) -> Result<Outcome> {
    election.require_supported()?;
    check_kappa(config.kappa)?;
    let n = election.num_voters();
    let all: Vec<usize> = (0..election.num_candidates()).collect();
    let mut pool = constraint.available(&[], &all)?;
    let mut removed: Vec<Removal> = all
        .iter()
        .filter(|c| !pool.contains(c))
        .map(|&candidate| Removal { candidate, time: 0.0 })
        .collect();
    removed.sort_by_key(|r| election.tie_rank(r.candidate));
    let mut spent = vec![0.0; n];
    let mut selected: Vec<usize> = Vec::new();
    let mut purchases = Vec::new();
    let mut stats = RunStats {
        executions: 1,
        ..RunStats::default()
    };
    let mut level = 0.0f64;
    let kappa = config.kappa;

    let feasible_with = |selected: &[usize], res: &SubroutineResult| {
        let mut set = selected.to_vec();
        set.extend(res.purchases.iter().map(|p| p.candidate));
        constraint.is_feasible(&set)
    };

    while !pool.is_empty() {
        let pool_cost: f64 = pool.iter().map(|&c| election.cost(c) as f64).sum();
        let hi = level.max(spent.iter().copied().fold(0.0, f64::max)) + 2.0 * pool_cost + 1.0;
        let mut check = |t: f64| -> Result<bool> {
            let res = subroutine(election, &spent, t, &pool, kappa);
            stats.max_scaling = stats.max_scaling.max(res.final_max_scaling);
            Ok(feasible_with(&selected, &res))
        };
        let (t_use, mut chosen, trim) = if check(hi)? {
            (hi, subroutine(election, &spent, hi, &pool, kappa), false)
        } else if !check(level)? {
            (level, subroutine(election, &spent, level, &pool, kappa), true)
        } else {
            let bracket = latest_true(&mut check, level, hi, &config.search)?;
            stats.search_fallbacks += bracket.fallbacks;
            let res = subroutine(election, &spent, bracket.true_side, &pool, kappa);
            if res.purchases.is_empty() {
                let over = subroutine(election, &spent, bracket.false_side, &pool, kappa);
                (bracket.false_side, over, true)
            } else {
                (bracket.true_side, res, false)
            }
        };
        if trim {
            let mut kept = Vec::new();
            let mut set = selected.clone();
            for p in chosen.purchases {
                if constraint.can_add(&set, p.candidate) {
                    set.push(p.candidate);
                    kept.push(p);
                }
            }
            chosen.purchases = kept;
        }
        if chosen.purchases.is_empty() {
            return Err(Error::internal(
                "equal shares made no progress at the feasibility boundary",
            ));
        }
        stats.max_scaling = stats.max_scaling.max(chosen.final_max_scaling);
        level = level.max(t_use);
        for p in chosen.purchases {
            for &(i, x) in &p.payments {
                spent[i] += x;
            }
            selected.push(p.candidate);
            pool.retain(|&c| c != p.candidate);
            purchases.push(Purchase {
                candidate: p.candidate,
                time: Some(level),
                rho: Some(p.rho),
                funded_fraction: 1.0,
                payments: p.payments,
            });
        }
        let mut dropped: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&c| !constraint.can_add(&selected, c))
            .collect();
        pool.retain(|c| !dropped.contains(c));
        dropped.sort_by_key(|&c| election.tie_rank(c));
        removed.extend(dropped.into_iter().map(|candidate| Removal {
            candidate,
            time: level,
        }));
    }
    let unspent = spent.iter().map(|&s| (level - s).max(0.0)).collect();
    Ok(Outcome {
        rule: "mes".into(),
        purchases,
        removed,
        unspent,
        has_payments: true,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::ElectionBuilder;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cap_examples() {
        assert_abs_diff_eq!(mes_cap(10.0, 1.0, 100.0, 0.0, 2.0).unwrap(), 2.0);
        assert_abs_diff_eq!(mes_cap(1.0, 1.0, 100.0, 1.0, 5.0).unwrap(), 1.0);
        assert_abs_diff_eq!(mes_cap(3.0, 2.0, 1.0, 0.5, 0.1).unwrap(), 3.0);
    }

    #[test]
    fn rho_best_example() {
        let mut b = ElectionBuilder::new();
        b.voter("v1").voter("v2").candidate("a", 2).candidate("b", 3);
        b.utility("v1", "a", 2.0).utility("v2", "a", 2.0).utility("v1", "b", 3.0);
        let e = b.build().unwrap();
        assert_abs_diff_eq!(rho_best(&e, &[0, 1]).unwrap(), 0.5);
        assert!(rho_best(&e, &[]).is_err());
    }

    #[test]
    fn subroutine_pays_balances() {
        let mut b = ElectionBuilder::new();
        b.voter("v1").voter("v2").candidate("a", 2);
        b.utility("v1", "a", 1.0).utility("v2", "a", 1.0);
        let e = b.build().unwrap();
        let res = equal_shares_subroutine(&e, &[0.0, 0.0], 1.0, &[0], 1.0).unwrap();
        assert_eq!(res.purchases.len(), 1);
        for &(_, p) in &res.purchases[0].payments {
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        }
        let none = equal_shares_subroutine(&e, &[1.0, 1.0], 1.0, &[0], 1.0).unwrap();
        assert!(none.purchases.is_empty());
    }
}
