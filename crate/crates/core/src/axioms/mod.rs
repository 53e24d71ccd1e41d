//! Proportionality axioms: brute-force EJR and degree checkers, the
//! polynomial EJR+ up-to-one checker, bound curves and a hand-built instance
//! separating EJR from the half proportionality degree.

mod bounds;
mod cohesion;
mod counterexample;
mod ejr_plus;

pub use bounds::{general_gamma_coefficient, prop_degree_bound, BoundKind, DegreeBound};
pub use cohesion::{
    agreed_values, max_cohesive_alpha, max_cohesive_alpha_pb, max_strong_cohesive_alpha,
    Certificate, Family, GeneralOracle, Limits, Strength,
};
pub use counterexample::{build_counterexample, counterexample_weights, Counterexample};
pub use ejr_plus::check_ejr_plus_up_to_one;

use rayon::prelude::*;
use serde::Serialize;

use crate::constraint::{Constraint, ConstraintSpec};
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::Ranking;

/// Absolute slack on every degree comparison.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomKind {
    Ejr,
    WeakEjr,
    PropDegree,
    PjrDegree,
    EjrPlusUpToOne,
    RankingEjr,
    RankingPjrDegree,
}

/// A group (or candidate) for which the checked property fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub group: Vec<usize>,
    pub alpha: f64,
    pub beta: Option<usize>,
    pub agreed: Vec<usize>,
    /// The group's value under the checked functional.
    pub achieved: f64,
    /// The value the property demands.
    pub required: f64,
    pub candidate: Option<usize>,
    pub prefix: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: AxiomKind,
    pub violations: Vec<Witness>,
    pub checked_groups: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub strength: Strength,
    pub limits: Limits,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            strength: Strength::Ordinary,
            limits: Limits::default(),
        }
    }
}

impl CheckOptions {
    pub fn weak() -> Self {
        CheckOptions {
            strength: Strength::Strong,
            ..Self::default()
        }
    }
}

/// Cohesiveness backend: the budget-share notion for plain budgets under
/// ordinary strength, the general adversarial notion otherwise.
enum Backend<'a> {
    Budget { budget: u64, limits: Limits },
    General(GeneralOracle<'a>, Strength),
}

struct Scanner<'a> {
    election: &'a Election,
    backend: Backend<'a>,
}

impl<'a> Scanner<'a> {
    fn new(election: &'a Election, constraint: &'a Constraint, opts: &CheckOptions) -> Result<Self> {
        let n = election.num_voters();
        if n > opts.limits.max_voters || n > 31 {
            return Err(Error::TooLarge(format!(
                "{n} voters (limit {})",
                opts.limits.max_voters
            )));
        }
        let backend = match (constraint.budget(), opts.strength) {
            (Some(budget), Strength::Ordinary) => Backend::Budget {
                budget,
                limits: opts.limits,
            },
            _ => Backend::General(
                GeneralOracle::new(election, constraint, &opts.limits)?,
                opts.strength,
            ),
        };
        Ok(Scanner { election, backend })
    }

    fn exceeds(&self, group: &[usize], threshold: f64) -> Result<Option<Certificate>> {
        match &self.backend {
            Backend::Budget { budget, limits } => {
                let values = agreed_values(self.election, group);
                let (alpha, agreed) =
                    cohesion::knapsack(self.election, &values, *budget, group.len(), limits)?;
                Ok((alpha > threshold).then_some(Certificate {
                    alpha,
                    beta: None,
                    agreed,
                }))
            }
            Backend::General(oracle, strength) => oracle.exceeds(group, threshold, *strength),
        }
    }

    /// Runs `test` on every non-empty voter group, in parallel, in mask order.
    fn scan<F>(&self, test: F) -> Result<(Vec<Witness>, usize)>
    where
        F: Fn(&[usize]) -> Result<Option<Witness>> + Sync,
    {
        let n = self.election.num_voters();
        let total = (1u32 << n) - 1;
        let found: Vec<Option<Witness>> = (1..=total)
            .into_par_iter()
            .map(|mask| {
                let group: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                test(&group)
            })
            .collect::<Result<_>>()?;
        Ok((found.into_iter().flatten().collect(), total as usize))
    }
}

fn satisfactions(election: &Election, w: &[usize]) -> Vec<f64> {
    (0..election.num_voters())
        .map(|i| election.satisfaction(i, w))
        .collect()
}

/// Brute-force EJR (ordinary strength) or weak EJR (strong strength).
pub fn check_ejr(
    election: &Election,
    constraint: &Constraint,
    w: &[usize],
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    let scanner = Scanner::new(election, constraint, opts)?;
    let sat = satisfactions(election, w);
    let (violations, checked) = scanner.scan(|group| {
        let best = group.iter().map(|&i| sat[i]).fold(0.0, f64::max);
        Ok(scanner.exceeds(group, best + EPS)?.map(|cert| Witness {
            group: group.to_vec(),
            alpha: cert.alpha,
            beta: cert.beta,
            agreed: cert.agreed,
            achieved: best,
            required: cert.alpha,
            candidate: None,
            prefix: None,
        }))
    })?;
    Ok(AxiomReport {
        axiom: match opts.strength {
            Strength::Ordinary => AxiomKind::Ejr,
            Strength::Strong => AxiomKind::WeakEjr,
        },
        violations,
        checked_groups: checked,
    })
}

fn check_degree(
    election: &Election,
    constraint: &Constraint,
    bound: DegreeBound,
    opts: &CheckOptions,
    axiom: AxiomKind,
    value_of: impl Fn(&[usize]) -> f64 + Sync,
) -> Result<AxiomReport> {
    let scanner = Scanner::new(election, constraint, opts)?;
    let n = election.num_voters() as f64;
    let u_max = election.u_max();
    let (violations, checked) = scanner.scan(|group| {
        let value = value_of(group);
        let gamma = n / group.len() as f64;
        let Some(threshold) = bound.alpha_threshold(value + EPS, gamma, u_max) else {
            return Ok(None);
        };
        let threshold = threshold.max(-1.0);
        Ok(scanner.exceeds(group, threshold)?.map(|cert| Witness {
            group: group.to_vec(),
            required: bound.evaluate(cert.alpha, gamma, u_max),
            alpha: cert.alpha,
            beta: cert.beta,
            agreed: cert.agreed,
            achieved: value,
            candidate: None,
            prefix: None,
        }))
    })?;
    Ok(AxiomReport {
        axiom,
        violations,
        checked_groups: checked,
    })
}

/// Average satisfaction of every cohesive group must reach `bound(α)`.
pub fn check_prop_degree(
    election: &Election,
    constraint: &Constraint,
    w: &[usize],
    bound: DegreeBound,
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    let sat = satisfactions(election, w);
    check_degree(election, constraint, bound, opts, AxiomKind::PropDegree, |g| {
        g.iter().map(|&i| sat[i]).sum::<f64>() / g.len() as f64
    })
}

/// `Σ_{c∈W} max_{i∈S} u_i(c)` of every cohesive group must reach
/// `(α − u_max)/(κ + 1)`.
pub fn check_pjr_degree(
    election: &Election,
    constraint: &Constraint,
    w: &[usize],
    kappa: f64,
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    check_pjr_with(election, constraint, w, DegreeBound::Pjr { kappa }, opts)
}

/// PJR-style check with an arbitrary bound.
pub fn check_pjr_with(
    election: &Election,
    constraint: &Constraint,
    w: &[usize],
    bound: DegreeBound,
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    check_degree(election, constraint, bound, opts, AxiomKind::PjrDegree, |g| {
        w.iter()
            .map(|&c| g.iter().map(|&i| election.utility(i, c)).fold(0.0, f64::max))
            .sum()
    })
}

/// What to verify on each ranking prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankingCheck {
    Ejr,
    PjrDegree { kappa: f64 },
    PropDegree(DegreeBound),
}

/// Checks every prefix of `ranking` under a budget equal to the prefix cost.
pub fn check_ranking(
    election: &Election,
    ranking: &Ranking,
    check: RankingCheck,
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    let mut violations = Vec::new();
    let mut checked = 0;
    for len in 0..=ranking.order.len() {
        let prefix = ranking.prefix(len);
        let budget = election.total_cost(prefix);
        let constraint = ConstraintSpec::Budget { budget }.compile(election)?;
        let report = match check {
            RankingCheck::Ejr => check_ejr(election, &constraint, prefix, opts)?,
            RankingCheck::PjrDegree { kappa } => {
                check_pjr_degree(election, &constraint, prefix, kappa, opts)?
            }
            RankingCheck::PropDegree(bound) => {
                check_prop_degree(election, &constraint, prefix, bound, opts)?
            }
        };
        checked += report.checked_groups;
        violations.extend(report.violations.into_iter().map(|mut v| {
            v.prefix = Some(len);
            v
        }));
    }
    Ok(AxiomReport {
        axiom: match check {
            RankingCheck::Ejr => AxiomKind::RankingEjr,
            _ => AxiomKind::RankingPjrDegree,
        },
        violations,
        checked_groups: checked,
    })
}

/// Prefix EJR of a ranking.
pub fn check_ranking_ejr(
    election: &Election,
    ranking: &Ranking,
    opts: &CheckOptions,
) -> Result<AxiomReport> {
    check_ranking(election, ranking, RankingCheck::Ejr, opts)
}
