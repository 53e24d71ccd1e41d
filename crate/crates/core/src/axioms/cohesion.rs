//! Exhaustive cohesiveness oracles.
//!
//! A voter group `S` is (α, β)-cohesive when, for every feasible adversarial
//! set `T` with `|T| < β(n − |S|)/|S|`, some `X` with `|X| ≤ β` and `X ∪ T`
//! feasible gives the group an agreed value of at least α. The agreed value of
//! a candidate is the minimum utility over the group; ordinary cohesiveness
//! sums it over `X`, strong cohesiveness uses `β · min`.
//!
//! For budget constraints a separate knapsack notion is available: the group
//! may spend its proportional share `b·|S|/n` of the budget.

use crate::constraint::{mask_to_set, Constraint, MaskOracle};
use crate::election::Election;
use crate::error::{Error, Result};

/// Scale caps for exhaustive checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_voters: usize,
    pub max_candidates: usize,
    pub max_feasible_sets: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_voters: 14,
            max_candidates: 40,
            max_feasible_sets: 2_000_000,
        }
    }
}

/// Whether X is scored by sum (ordinary) or by `β · min` (strong).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    Ordinary,
    Strong,
}

/// A cohesiveness certificate for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub alpha: f64,
    /// `None` for the budget-share notion, which has no β.
    pub beta: Option<usize>,
    /// A best agreed set against the empty adversary (or the knapsack optimum).
    pub agreed: Vec<usize>,
}

/// Agreed value per candidate: minimum utility over `group`.
pub fn agreed_values(election: &Election, group: &[usize]) -> Vec<f64> {
    (0..election.num_candidates())
        .map(|c| {
            group
                .iter()
                .map(|&i| election.utility(i, c))
                .fold(f64::INFINITY, f64::min)
        })
        .map(|a| if a.is_finite() { a } else { 0.0 })
        .collect()
}

/// Largest knapsack value of agreed utilities within the group's budget share.
pub fn max_cohesive_alpha_pb(election: &Election, budget: u64, group: &[usize]) -> Result<f64> {
    check_group(election, group)?;
    let values = agreed_values(election, group);
    Ok(knapsack(election, &values, budget, group.len(), &Limits::default())?.0)
}

pub(crate) fn knapsack(
    election: &Election,
    values: &[f64],
    budget: u64,
    group_size: usize,
    limits: &Limits,
) -> Result<(f64, Vec<usize>)> {
    let n = election.num_voters() as u128;
    let share = budget as u128 * group_size as u128;
    let items: Vec<usize> = (0..values.len())
        .filter(|&c| values[c] > 0.0 && n * election.cost(c) as u128 <= share)
        .collect();
    if items.len() > limits.max_candidates.min(24) {
        return Err(Error::TooLarge(format!(
            "knapsack over {} positively valued candidates",
            items.len()
        )));
    }
    let mut best = (0.0, Vec::new());
    let k = items.len();
    for mask in 0u32..(1u32 << k) {
        let mut cost = 0u128;
        let mut value = 0.0;
        for (j, &c) in items.iter().enumerate() {
            if mask >> j & 1 == 1 {
                cost += election.cost(c) as u128;
                value += values[c];
            }
        }
        if n * cost <= share && value > best.0 {
            let chosen = items
                .iter()
                .enumerate()
                .filter(|(j, _)| mask >> j & 1 == 1)
                .map(|(_, &c)| c)
                .collect();
            best = (value, chosen);
        }
    }
    Ok(best)
}

fn check_group(election: &Election, group: &[usize]) -> Result<()> {
    if group.is_empty() {
        return Err(Error::input("cohesiveness needs a non-empty group"));
    }
    if let Some(&i) = group.iter().find(|&&i| i >= election.num_voters()) {
        return Err(Error::input(format!("unknown voter index {i}")));
    }
    Ok(())
}

/// Enumerated feasible family over at most 64 candidates.
pub struct Family<'a> {
    oracle: MaskOracle<'a>,
    m: usize,
    /// Feasible sets that cannot be extended.
    bases: Vec<u64>,
    /// Feasible sets grouped by size.
    by_size: Vec<Vec<u64>>,
    /// Whether the set at the same position in `by_size` is extendable.
    extendable: Vec<Vec<bool>>,
}

impl<'a> Family<'a> {
    pub fn enumerate(constraint: &'a Constraint, m: usize, limits: &Limits) -> Result<Self> {
        if m > 64 || m > limits.max_candidates {
            return Err(Error::TooLarge(format!("{m} candidates")));
        }
        let mut by_size: Vec<Vec<u64>> = vec![Vec::new(); m + 1];
        let mut extendable: Vec<Vec<bool>> = vec![Vec::new(); m + 1];
        let mut bases = Vec::new();
        let mut count = 0usize;
        let oracle = MaskOracle::new(constraint);
        let mut stack: Vec<(u64, usize)> = vec![(0, 0)];
        while let Some((mask, from)) = stack.pop() {
            count += 1;
            if count > limits.max_feasible_sets {
                return Err(Error::TooLarge(format!(
                    "more than {} feasible sets",
                    limits.max_feasible_sets
                )));
            }
            let mut can_grow = false;
            for c in 0..m {
                if mask >> c & 1 == 1 || !oracle.can_add(mask, c) {
                    continue;
                }
                can_grow = true;
                if c >= from {
                    stack.push((mask | 1 << c, c + 1));
                }
            }
            let size = mask.count_ones() as usize;
            by_size[size].push(mask);
            extendable[size].push(can_grow);
            if !can_grow {
                bases.push(mask);
            }
        }
        Ok(Family {
            oracle,
            m,
            bases,
            by_size,
            extendable,
        })
    }

    pub fn num_sets(&self) -> usize {
        self.by_size.iter().map(Vec::len).sum()
    }

    /// Adversarial sets that dominate all others under the size bound `< limit`.
    fn adversaries(&self, limit_exclusive: Option<usize>) -> impl Iterator<Item = u64> + '_ {
        let top = match limit_exclusive {
            None => 0,
            Some(l) => l.saturating_sub(1).min(self.m),
        };
        let allow_any = limit_exclusive.is_some();
        (0..=top).rev().flat_map(move |size| {
            let sets = &self.by_size[size];
            let ext = &self.extendable[size];
            sets.iter()
                .zip(ext)
                .filter(move |(_, &e)| size == top || !e || !allow_any)
                .map(|(&s, _)| s)
        })
    }
}

/// Cohesiveness queries for one election and constraint.
pub struct GeneralOracle<'a> {
    election: &'a Election,
    family: Family<'a>,
    matroid: bool,
}

impl<'a> GeneralOracle<'a> {
    pub fn new(election: &'a Election, constraint: &'a Constraint, limits: &Limits) -> Result<Self> {
        let family = Family::enumerate(constraint, election.num_candidates(), limits)?;
        Ok(GeneralOracle {
            election,
            family,
            matroid: constraint.is_matroid(),
        })
    }

    /// Exclusive upper bound on |T|, or `None` when only T = ∅ is adversarial.
    fn adversary_bound(&self, group_size: usize, beta: usize) -> Option<usize> {
        let n = self.election.num_voters();
        let slack = beta * (n - group_size);
        if slack == 0 {
            return None;
        }
        // |T| < slack / s  ⇔  |T| ≤ ceil(slack / s) − 1
        Some(slack.div_ceil(group_size))
    }

    /// Best agreed value achievable with `|X| ≤ β` (or `= β` when strong) next to `t`.
    fn best_response(&self, t: u64, beta: usize, values: &[f64], order: &[usize], strength: Strength) -> f64 {
        if self.matroid {
            let mut cur = t;
            let mut taken = 0;
            let mut total = 0.0;
            let mut last = f64::INFINITY;
            for &c in order {
                if taken == beta {
                    break;
                }
                if strength == Strength::Ordinary && values[c] <= 0.0 {
                    break;
                }
                let ok = t >> c & 1 == 1 || {
                    let fits = self.family.oracle.can_add(cur, c);
                    if fits {
                        cur |= 1 << c;
                    }
                    fits
                };
                if ok {
                    taken += 1;
                    total += values[c];
                    last = values[c];
                }
            }
            match strength {
                Strength::Ordinary => total,
                Strength::Strong if taken == beta => beta as f64 * last,
                Strength::Strong => f64::NEG_INFINITY,
            }
        } else {
            let mut best = f64::NEG_INFINITY;
            let mut members = Vec::with_capacity(self.family.m);
            for &d in &self.family.bases {
                if t & !d != 0 {
                    continue;
                }
                members.clear();
                members.extend(order.iter().copied().filter(|&c| d >> c & 1 == 1));
                let score = match strength {
                    Strength::Ordinary => members
                        .iter()
                        .take(beta)
                        .map(|&c| values[c])
                        .filter(|&v| v > 0.0)
                        .sum(),
                    Strength::Strong => {
                        if members.len() >= beta {
                            beta as f64 * values[members[beta - 1]]
                        } else {
                            f64::NEG_INFINITY
                        }
                    }
                };
                if score > best {
                    best = score;
                }
            }
            best
        }
    }

    /// α for fixed β, or `-∞` when no α works. Stops early once the running
    /// minimum drops to `floor` or below.
    fn alpha_for_beta(&self, group_size: usize, beta: usize, values: &[f64], order: &[usize], strength: Strength, floor: f64) -> f64 {
        let bound = self.adversary_bound(group_size, beta);
        let mut worst = f64::INFINITY;
        for t in self.family.adversaries(bound) {
            let v = self.best_response(t, beta, values, order, strength);
            if v < worst {
                worst = v;
                if worst <= floor {
                    break;
                }
            }
        }
        worst
    }

    fn beta_cap(&self, values: &[f64]) -> usize {
        let positive = values.iter().filter(|&&v| v > 0.0).count();
        positive.clamp(1, self.family.m.max(1))
    }

    fn order(values: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        order
    }

    fn agreed_for(&self, values: &[f64], order: &[usize], beta: usize, strength: Strength) -> Vec<usize> {
        // a maximizing X against the empty adversary
        let mut best: (f64, Vec<usize>) = (f64::NEG_INFINITY, Vec::new());
        let mut buf = Vec::new();
        for &d in &self.family.bases {
            mask_to_set(d, &mut buf);
            let mut members: Vec<usize> = order.iter().copied().filter(|c| buf.contains(c)).collect();
            if strength == Strength::Ordinary {
                members.retain(|&c| values[c] > 0.0);
            }
            members.truncate(beta);
            let score = match strength {
                Strength::Ordinary => members.iter().map(|&c| values[c]).sum(),
                Strength::Strong if members.len() == beta => {
                    beta as f64 * values[members[beta - 1]]
                }
                Strength::Strong => f64::NEG_INFINITY,
            };
            if score > best.0 {
                best = (score, members);
            }
        }
        best.1
    }

    /// Largest α for which `group` is (α, β)-cohesive (0 when none).
    pub fn alpha(&self, group: &[usize], beta: usize, strength: Strength) -> Result<f64> {
        check_group(self.election, group)?;
        if beta == 0 {
            return Err(Error::input("beta must be positive"));
        }
        let values = agreed_values(self.election, group);
        let order = Self::order(&values);
        let a = self.alpha_for_beta(group.len(), beta, &values, &order, strength, f64::NEG_INFINITY);
        Ok(a.max(0.0))
    }

    /// Largest α over all β.
    pub fn max_alpha(&self, group: &[usize], strength: Strength) -> Result<Certificate> {
        check_group(self.election, group)?;
        let values = agreed_values(self.election, group);
        let order = Self::order(&values);
        let mut best = Certificate {
            alpha: 0.0,
            beta: Some(1),
            agreed: Vec::new(),
        };
        for beta in 1..=self.beta_cap(&values) {
            let a = self.alpha_for_beta(group.len(), beta, &values, &order, strength, best.alpha);
            if a > best.alpha {
                best = Certificate {
                    alpha: a,
                    beta: Some(beta),
                    agreed: Vec::new(),
                };
            }
        }
        if let Some(beta) = best.beta {
            best.agreed = self.agreed_for(&values, &order, beta, strength);
        }
        Ok(best)
    }

    /// A certificate with α strictly above `threshold`, if one exists.
    pub fn exceeds(&self, group: &[usize], threshold: f64, strength: Strength) -> Result<Option<Certificate>> {
        check_group(self.election, group)?;
        let values = agreed_values(self.election, group);
        let order = Self::order(&values);
        for beta in 1..=self.beta_cap(&values) {
            let a = self.alpha_for_beta(group.len(), beta, &values, &order, strength, threshold);
            if a > threshold {
                return self.max_alpha(group, strength).map(Some);
            }
        }
        Ok(None)
    }
}

/// Largest α with `group` (α, β)-cohesive under the general definition.
pub fn max_cohesive_alpha(
    election: &Election,
    constraint: &Constraint,
    group: &[usize],
    beta: usize,
) -> Result<f64> {
    GeneralOracle::new(election, constraint, &Limits::default())?.alpha(group, beta, Strength::Ordinary)
}

/// Largest α with `group` strongly (α, β)-cohesive.
pub fn max_strong_cohesive_alpha(
    election: &Election,
    constraint: &Constraint,
    group: &[usize],
    beta: usize,
) -> Result<f64> {
    GeneralOracle::new(election, constraint, &Limits::default())?.alpha(group, beta, Strength::Strong)
}
