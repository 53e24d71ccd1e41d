//! PropRank: continuous-time purchasing with per-voter spending caps driven by
//! local and global scaling factors.
//!
//! Time flows continuously and every voter earns one unit of money per unit of
//! time. A voter's willingness to pay for a candidate is capped by
//! [`spending_cap`], which shrinks when the voter's scaling factor exceeds their
//! utility for the candidate. The earliest moment at which some candidate can
//! be bought is located by bisection; among candidates affordable at that
//! moment the one with the smallest payment-per-utility wins.

use crate::constraint::{Constraint, ConstraintSpec};
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Purchase, Ranking, Removal, RunStats};
use crate::search::{earliest_true, SearchConfig};

/// Relative tolerance under which two ρ values count as tied.
pub(crate) const RHO_TIE: f64 = 1e-9;

/// Relative shortfall of collected caps still treated as covering the cost.
///
/// Once scaling factors grow in proportion to balances, the cap sum of a lone
/// candidate equals its cost exactly, so a strict comparison would fail on
/// rounding alone.
pub const AFFORD_TOL: f64 = 1e-12;

/// Looser shortfall used when choosing among candidates at an event time, so
/// that candidates reaching their cost at the same exact moment but at
/// different rates all compete.
pub(crate) const SELECT_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn covers(total: f64, cost: f64) -> bool {
    total >= cost * (1.0 - AFFORD_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProprankConfig {
    /// Blend between the two cap formulas, in `[0, 1]`.
    pub kappa: f64,
    pub search: SearchConfig,
}

impl Default for ProprankConfig {
    fn default() -> Self {
        ProprankConfig {
            kappa: 1.0,
            search: SearchConfig::default(),
        }
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<()> {
    if (0.0..=1.0).contains(&kappa) {
        Ok(())
    } else {
        Err(Error::input(format!("kappa must lie in [0, 1], got {kappa}")))
    }
}

/// Spending cap of a voter with balance `p` and utility `u` under scaling `lambda`.
pub fn spending_cap(p: f64, u: f64, lambda: f64, kappa: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::contract("spending caps are only defined for positive utility"));
    }
    check_kappa(kappa)?;
    if p < 0.0 || lambda < 0.0 {
        return Err(Error::contract("balance and scaling must be nonnegative"));
    }
    Ok(cap(p, u, lambda, kappa))
}

#[inline]
pub(crate) fn cap(p: f64, u: f64, lambda: f64, kappa: f64) -> f64 {
    let d = lambda.max(u);
    let x = kappa * 2.0 * p * u / (u + d) + (1.0 - kappa) * p * u / d;
    x.min(p)
}

/// Smallest ρ with `Σ min(x_i, u_i·ρ) = cost`, or `None` when `Σ x_i < cost`
/// (up to a relative [`AFFORD_TOL`]).
pub fn minimal_rho(caps: &[(f64, f64)], cost: f64) -> Result<Option<f64>> {
    if !(cost > 0.0) {
        return Err(Error::contract("cost must be positive"));
    }
    if caps.iter().any(|&(x, u)| x < 0.0 || !(u > 0.0)) {
        return Err(Error::contract("caps must be nonnegative and utilities positive"));
    }
    let mut sorted = caps.to_vec();
    Ok(rho_sweep(&mut sorted, cost))
}

/// Saturation sweep; reorders `caps` by `x/u`.
pub(crate) fn rho_sweep(caps: &mut [(f64, f64)], cost: f64) -> Option<f64> {
    rho_sweep_within(caps, cost, AFFORD_TOL)
}

/// [`rho_sweep`] with an explicit relative shortfall tolerance.
pub(crate) fn rho_sweep_within(caps: &mut [(f64, f64)], cost: f64, tol: f64) -> Option<f64> {
    let total: f64 = caps.iter().map(|&(x, _)| x).sum();
    if total < cost * (1.0 - tol) {
        return None;
    }
    caps.sort_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)));
    let mut rest = cost;
    let mut weight: f64 = caps.iter().map(|&(_, u)| u).sum();
    for &(x, u) in caps.iter() {
        if x * weight >= rest * u {
            return Some(rest / weight);
        }
        rest -= x;
        weight -= u;
    }
    caps.last().map(|&(x, u)| x / u)
}

/// Local scaling factors for every voter, starting from `global`.
///
/// For each pool candidate, supporters are visited by increasing utility while
/// the money of the not-yet-visited suffix shrinks; each voter's factor is the
/// running maximum of `(suffix money / cost) · utility`.
pub fn compute_local_scalings(
    election: &Election,
    balances: &[f64],
    global: &[f64],
    pool: &[usize],
) -> Result<Vec<f64>> {
    if let Some(&c) = pool.iter().find(|&&c| election.supporters(c).is_empty()) {
        return Err(Error::contract(format!(
            "candidate '{}' has no supporter",
            election.candidate_id(c)
        )));
    }
    let mut lambda = global.to_vec();
    scalings_into(election, balances, pool.iter().copied(), &mut lambda);
    Ok(lambda)
}

pub(crate) fn scalings_into(
    election: &Election,
    balances: &[f64],
    pool: impl Iterator<Item = usize>,
    lambda: &mut [f64],
) {
    for c in pool {
        let supporters = election.supporters(c);
        let cost = election.cost(c) as f64;
        let mut money: f64 = supporters.iter().map(|&(i, _)| balances[i]).sum();
        let mut best = 0.0f64;
        for &(i, u) in supporters {
            best = best.max(money.max(0.0) / cost * u);
            if best > lambda[i] {
                lambda[i] = best;
            }
            money -= balances[i];
        }
    }
}

/// Chooses the better of two `(rho, candidate)` options: lower ρ, near-ties by tie order.
pub(crate) fn better_rho(election: &Election, a: (f64, usize), b: (f64, usize)) -> bool {
    let scale = a.0.abs().max(b.0.abs()).max(f64::MIN_POSITIVE);
    if (a.0 - b.0).abs() <= RHO_TIE * scale {
        election.tie_rank(a.1) < election.tie_rank(b.1)
    } else {
        a.0 < b.0
    }
}

/// A purchase decided by the engine but not yet applied.
#[derive(Debug, Clone)]
pub(crate) struct Event {
    pub time: f64,
    pub candidate: usize,
    pub rho: f64,
    pub payments: Vec<(usize, f64)>,
    pub lambda: Vec<f64>,
    pub fallbacks: usize,
}

/// Mutable state of one PropRank execution.
pub(crate) struct Engine<'a> {
    election: &'a Election,
    constraint: &'a Constraint,
    kappa: f64,
    search: SearchConfig,
    pub time: f64,
    pub spent: Vec<f64>,
    pub global: Vec<f64>,
    /// Remaining candidates, increasing index.
    pub remaining: Vec<usize>,
    pub selected: Vec<usize>,
    pub purchases: Vec<Purchase>,
    pub removed: Vec<Removal>,
    pub stats: RunStats,
}

impl<'a> Engine<'a> {
    pub fn new(
        election: &'a Election,
        constraint: &'a Constraint,
        config: &ProprankConfig,
    ) -> Result<Self> {
        election.require_supported()?;
        check_kappa(config.kappa)?;
        let n = election.num_voters();
        let all: Vec<usize> = (0..election.num_candidates()).collect();
        let remaining = constraint.available(&[], &all)?;
        let mut removed: Vec<Removal> = all
            .iter()
            .filter(|c| !remaining.contains(c))
            .map(|&candidate| Removal { candidate, time: 0.0 })
            .collect();
        removed.sort_by_key(|r| election.tie_rank(r.candidate));
        Ok(Engine {
            election,
            constraint,
            kappa: config.kappa,
            search: config.search,
            time: 0.0,
            spent: vec![0.0; n],
            global: vec![0.0; n],
            remaining,
            selected: Vec::new(),
            purchases: Vec::new(),
            removed,
            stats: RunStats {
                executions: 1,
                ..RunStats::default()
            },
        })
    }

    fn balances(&self, t: f64) -> Vec<f64> {
        self.spent.iter().map(|&s| (t - s).max(0.0)).collect()
    }

    fn scalings(&self, balances: &[f64], in_pool: &dyn Fn(usize) -> bool) -> Vec<f64> {
        let mut lambda = self.global.clone();
        let pool = self.remaining.iter().copied().filter(|&c| in_pool(c));
        scalings_into(self.election, balances, pool, &mut lambda);
        lambda
    }

    fn caps_for(&self, c: usize, balances: &[f64], lambda: &[f64], buf: &mut Vec<(f64, f64)>) {
        buf.clear();
        for &(i, u) in self.election.supporters(c) {
            buf.push((cap(balances[i], u, lambda[i], self.kappa), u));
        }
    }

    fn any_affordable(&self, t: f64, in_pool: &dyn Fn(usize) -> bool) -> bool {
        let balances = self.balances(t);
        let lambda = self.scalings(&balances, in_pool);
        self.remaining.iter().any(|&c| {
            let cost = self.election.cost(c) as f64;
            let total: f64 = self
                .election
                .supporters(c)
                .iter()
                .map(|&(i, u)| cap(balances[i], u, lambda[i], self.kappa))
                .sum();
            covers(total, cost)
        })
    }

    fn best_at(&self, t: f64, in_pool: &dyn Fn(usize) -> bool) -> Option<Event> {
        let balances = self.balances(t);
        let lambda = self.scalings(&balances, in_pool);
        let mut buf = Vec::new();
        let mut best: Option<(f64, usize)> = None;
        for &c in &self.remaining {
            self.caps_for(c, &balances, &lambda, &mut buf);
            if let Some(rho) = rho_sweep_within(&mut buf, self.election.cost(c) as f64, SELECT_TOL) {
                if best.map_or(true, |b| better_rho(self.election, (rho, c), b)) {
                    best = Some((rho, c));
                }
            }
        }
        let (rho, c) = best?;
        let payments = self
            .election
            .supporters(c)
            .iter()
            .map(|&(i, u)| (i, cap(balances[i], u, lambda[i], self.kappa).min(u * rho)))
            .collect::<Vec<_>>();
        let mut payments = payments;
        payments.sort_by_key(|&(i, _)| i);
        Some(Event {
            time: t,
            candidate: c,
            rho,
            payments,
            lambda,
            fallbacks: 0,
        })
    }

    /// Earliest purchase under the given scaling pool, without applying it.
    pub fn next_event(&self, in_pool: &dyn Fn(usize) -> bool) -> Result<Option<Event>> {
        if self.remaining.is_empty() {
            return Ok(None);
        }
        if self.any_affordable(self.time, in_pool) {
            return self
                .best_at(self.time, in_pool)
                .map(Some)
                .ok_or_else(|| Error::internal("affordable candidate vanished"));
        }
        let u_max = self.election.u_max();
        let mut step = self
            .remaining
            .iter()
            .map(|&c| {
                let top = self.election.supporters(c).last().map_or(0.0, |&(_, u)| u);
                self.election.cost(c) as f64 * u_max / top
            })
            .fold(f64::INFINITY, f64::min);
        let mut hi = self.time + step;
        let mut tries = 0;
        while !self.any_affordable(hi, in_pool) {
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return Err(Error::internal("no candidate ever becomes affordable"));
            }
            step *= 2.0;
            hi = self.time + step;
        }
        let bracket = earliest_true(
            |t| Ok(self.any_affordable(t, in_pool)),
            self.time,
            hi,
            &self.search,
        )?;
        let mut ev = self
            .best_at(bracket.true_side, in_pool)
            .ok_or_else(|| Error::internal("bisection ended on an unaffordable time"))?;
        ev.fallbacks = bracket.fallbacks;
        Ok(Some(ev))
    }

    /// Applies a purchase; returns the candidates it made infeasible.
    pub fn commit(&mut self, ev: Event) -> Vec<usize> {
        self.time = ev.time;
        for &(i, p) in &ev.payments {
            self.spent[i] += p;
        }
        let lambda_max = ev.lambda.iter().copied().fold(0.0, f64::max);
        self.stats.max_scaling = self.stats.max_scaling.max(lambda_max);
        self.stats.search_fallbacks += ev.fallbacks;
        for (g, &l) in self.global.iter_mut().zip(&ev.lambda) {
            if l > *g {
                *g = l;
            }
        }
        self.selected.push(ev.candidate);
        self.remaining.retain(|&c| c != ev.candidate);
        let mut dropped = Vec::new();
        let (selected, constraint) = (&self.selected, self.constraint);
        self.remaining.retain(|&c| {
            let keep = constraint.can_add(selected, c);
            if !keep {
                dropped.push(c);
            }
            keep
        });
        dropped.sort_by_key(|&c| self.election.tie_rank(c));
        for &c in &dropped {
            self.removed.push(Removal {
                candidate: c,
                time: ev.time,
            });
        }
        self.purchases.push(Purchase {
            candidate: ev.candidate,
            time: Some(ev.time),
            rho: Some(ev.rho),
            funded_fraction: 1.0,
            payments: ev.payments,
        });
        dropped
    }

    pub fn into_outcome(self, rule: &str) -> Outcome {
        let unspent = self.spent.iter().map(|&s| (self.time - s).max(0.0)).collect();
        Outcome {
            rule: rule.to_string(),
            purchases: self.purchases,
            removed: self.removed,
            unspent,
            has_payments: true,
            stats: self.stats,
        }
    }
}

/// Runs PropRank in selection mode.
pub fn run_proprank(
    election: &Election,
    constraint: &Constraint,
    config: &ProprankConfig,
) -> Result<Outcome> {
    let mut engine = Engine::new(election, constraint, config)?;
    let all = |_: usize| true;
    while let Some(ev) = engine.next_event(&all)? {
        engine.commit(ev);
    }
    Ok(engine.into_outcome("proprank"))
}

/// Runs PropRank without constraints and orders all candidates by purchase time.
pub fn run_proprank_ranking(election: &Election, config: &ProprankConfig) -> Result<Ranking> {
    let constraint = ConstraintSpec::Unconstrained.compile(election)?;
    let outcome = run_proprank(election, &constraint, config)?;
    Ok(Ranking {
        order: outcome.purchases.iter().map(|p| p.candidate).collect(),
        timestamps: outcome.purchases.iter().map(|p| p.time.unwrap_or(0.0)).collect(),
    })
}
