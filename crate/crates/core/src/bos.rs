//! Equal Shares with Bounded Overspending for arbitrary downward-closed constraints.

use crate::constraint::Constraint;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Purchase, Removal, RunStats};
use crate::proprank::{rho_sweep, RHO_TIE};
use crate::search::{latest_true, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BosConfig {
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosPurchase {
    pub candidate: usize,
    pub rho: f64,
    /// Fraction of the cost covered by the collected payments.
    pub alpha: f64,
    pub payments: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosResult {
    pub purchases: Vec<BosPurchase>,
    pub valid: bool,
}

/// Best `(rho, alpha)` for one candidate: minimizes `rho / alpha` over the
/// balance breakpoints and the full-funding price.
fn best_option(election: &Election, c: usize, balance: &[f64]) -> Option<(f64, f64)> {
    let cost = election.cost(c) as f64;
    let supporters = election.supporters(c);
    let funded = |rho: f64| -> f64 {
        let sum: f64 = supporters
            .iter()
            .map(|&(i, u)| balance[i].min(u * rho))
            .sum();
        (sum / cost).min(1.0)
    };
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |rho: f64| {
        if !(rho > 0.0) || !rho.is_finite() {
            return;
        }
        let alpha = funded(rho);
        if alpha <= 0.0 {
            return;
        }
        let better = match best {
            None => true,
            Some((r, a)) => {
                let (q_new, q_old) = (rho / alpha, r / a);
                if (q_new - q_old).abs() <= RHO_TIE * q_old.abs() {
                    rho < r
                } else {
                    q_new < q_old
                }
            }
        };
        if better {
            best = Some((rho, alpha));
        }
    };
    for &(i, u) in supporters {
        consider(balance[i] / u);
    }
    if let Some(rho) = full_price(election, c, balance) {
        consider(rho);
    }
    best
}

/// Price at which supporters' balances exactly cover the cost, if they suffice.
fn full_price(election: &Election, c: usize, balance: &[f64]) -> Option<f64> {
    let mut caps: Vec<(f64, f64)> = election
        .supporters(c)
        .iter()
        .map(|&(i, u)| (balance[i], u))
        .collect();
    rho_sweep(&mut caps, election.cost(c) as f64)
}

/// One bounded-overspending pass at entitlement `t`.
///
/// `committed` is the selection fixed so far and `pool` the candidates still
/// eligible. The run is invalid when a candidate made infeasible by this pass
/// could have been fully funded at a better price than the option chosen.
pub fn bos_subroutine(
    election: &Election,
    constraint: &Constraint,
    spent: &[f64],
    t: f64,
    committed: &[usize],
    pool: &[usize],
) -> BosResult {
    let mut balance: Vec<f64> = spent.iter().map(|&s| (t - s).max(0.0)).collect();
    let mut local = committed.to_vec();
    let mut open: Vec<usize> = pool.to_vec();
    let mut purchases = Vec::new();
    loop {
        let has_money = |c: usize, balance: &[f64]| {
            election.supporters(c).iter().any(|&(i, _)| balance[i] > 0.0)
        };
        let (feasible, blocked): (Vec<usize>, Vec<usize>) =
            open.iter().partition(|&&c| constraint.can_add(&local, c));
        let mut best: Option<(f64, f64, usize)> = None;
        for &c in &feasible {
            if !has_money(c, &balance) {
                continue;
            }
            let Some((rho, alpha)) = best_option(election, c, &balance) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((r, a, b)) => {
                    let (q_new, q_old) = (rho / alpha, r / a);
                    if (q_new - q_old).abs() <= RHO_TIE * q_old.abs() {
                        if (rho - r).abs() <= RHO_TIE * r.abs() {
                            election.tie_rank(c) < election.tie_rank(b)
                        } else {
                            rho < r
                        }
                    } else {
                        q_new < q_old
                    }
                }
            };
            if better {
                best = Some((rho, alpha, c));
            }
        }
        let Some((rho, alpha, c)) = best else { break };
        let ratio = rho / alpha;
        for &d in &blocked {
            if !has_money(d, &balance) {
                continue;
            }
            if let Some(price) = full_price(election, d, &balance) {
                if price < ratio * (1.0 - RHO_TIE) {
                    return BosResult {
                        purchases,
                        valid: false,
                    };
                }
            }
        }
        let mut payments = Vec::new();
        for &(i, u) in election.supporters(c) {
            let pay = balance[i].min(u * rho);
            balance[i] = (balance[i] - pay).max(0.0);
            payments.push((i, pay));
        }
        payments.sort_by_key(|&(i, _)| i);
        let collected: f64 = payments.iter().map(|&(_, p)| p).sum();
        purchases.push(BosPurchase {
            candidate: c,
            rho,
            alpha: collected / election.cost(c) as f64,
            payments,
        });
        local.push(c);
        open.retain(|&x| x != c);
    }
    BosResult {
        purchases,
        valid: true,
    }
}

/// Runs the general bounded-overspending rule.
pub fn run_bos_general(
    election: &Election,
    constraint: &Constraint,
    config: &BosConfig,
) -> Result<Outcome> {
    election.require_supported()?;
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

    while !pool.is_empty() {
        let pool_cost: f64 = pool.iter().map(|&c| election.cost(c) as f64).sum();
        let hi = level.max(spent.iter().copied().fold(0.0, f64::max)) + 2.0 * pool_cost + 1.0;
        let run = |t: f64| bos_subroutine(election, constraint, &spent, t, &selected, &pool);
        let (t_use, result) = {
            let top = run(hi);
            if top.valid {
                (hi, top)
            } else {
                if !run(level).valid {
                    return Err(Error::internal(
                        "bounded overspending found no valid entitlement",
                    ));
                }
                let bracket =
                    latest_true(|t| Ok(run(t).valid), level, hi, &config.search)?;
                stats.search_fallbacks += bracket.fallbacks;
                (bracket.true_side, run(bracket.true_side))
            }
        };
        if result.purchases.is_empty() {
            return Err(Error::internal(
                "bounded overspending made no progress at the validity boundary",
            ));
        }
        level = level.max(t_use);
        for p in result.purchases {
            for &(i, x) in &p.payments {
                spent[i] += x;
            }
            selected.push(p.candidate);
            pool.retain(|&c| c != p.candidate);
            purchases.push(Purchase {
                candidate: p.candidate,
                time: Some(level),
                rho: Some(p.rho),
                funded_fraction: p.alpha,
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
        rule: "bos".into(),
        purchases,
        removed,
        unspent,
        has_payments: true,
        stats,
    })
}
