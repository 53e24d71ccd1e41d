//! Rule outputs: purchase records, removals, rankings and a structural audit.

use crate::constraint::Constraint;
use crate::election::Election;

/// Absolute tolerance for payment-sum comparisons.
pub const PAYMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Purchase {
    pub candidate: usize,
    /// Purchase time or entitlement level; `None` for rules without a clock.
    pub time: Option<f64>,
    /// Payment per unit of utility; `None` for rules without payments.
    pub rho: Option<f64>,
    /// Share of the cost collected from voters (below one only under overspending).
    pub funded_fraction: f64,
    /// `(voter, amount)` sorted by voter.
    pub payments: Vec<(usize, f64)>,
}

impl Purchase {
    pub fn total_paid(&self) -> f64 {
        self.payments.iter().map(|&(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Removal {
    pub candidate: usize,
    pub time: f64,
}

/// Diagnostics gathered during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    /// Largest local scaling factor seen at a checkpoint (purchase or subroutine end).
    pub max_scaling: f64,
    /// Number of complete executions (restarts and backtracking runs included).
    pub executions: usize,
    /// Times the time search detected a non-monotone bracket and rescanned.
    pub search_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rule: String,
    pub purchases: Vec<Purchase>,
    pub removed: Vec<Removal>,
    /// Per-voter money left at termination (zero for rules without payments).
    pub unspent: Vec<f64>,
    /// Whether purchases carry payments that must cover the cost.
    pub has_payments: bool,
    pub stats: RunStats,
}

impl Outcome {
    pub fn empty(rule: &str, n: usize) -> Self {
        Outcome {
            rule: rule.to_string(),
            purchases: Vec::new(),
            removed: Vec::new(),
            unspent: vec![0.0; n],
            has_payments: false,
            stats: RunStats::default(),
        }
    }

    /// Selected candidates in selection order.
    pub fn selected(&self) -> Vec<usize> {
        self.purchases.iter().map(|p| p.candidate).collect()
    }

    pub fn total_cost(&self, election: &Election) -> u64 {
        election.total_cost(&self.selected())
    }
}

/// Total order of all candidates by purchase time.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub timestamps: Vec<f64>,
}

impl Ranking {
    pub fn prefix(&self, len: usize) -> &[usize] {
        &self.order[..len]
    }
}

/// Structural checks shared by every rule: feasibility, exhaustiveness,
/// payment conservation and clock monotonicity. Returns a list of problems.
pub fn audit(election: &Election, constraint: &Constraint, outcome: &Outcome) -> Vec<String> {
    let mut problems = Vec::new();
    let selected = outcome.selected();
    let mut seen = vec![false; election.num_candidates()];
    for &c in &selected {
        if std::mem::replace(&mut seen[c], true) {
            problems.push(format!("candidate {c} selected twice"));
        }
    }
    if !constraint.is_feasible(&selected) {
        problems.push("selected set is infeasible".into());
    }
    for c in 0..election.num_candidates() {
        if !seen[c] && !election.supporters(c).is_empty() && constraint.can_add(&selected, c) {
            problems.push(format!(
                "not exhaustive: '{}' still fits",
                election.candidate_id(c)
            ));
        }
    }
    let mut last_time = f64::NEG_INFINITY;
    for p in &outcome.purchases {
        if let Some(t) = p.time {
            if t < last_time - 1e-12 * last_time.abs().max(1.0) {
                problems.push(format!("purchase times decrease at {}", p.candidate));
            }
            last_time = t;
        }
        // unpriced purchases (greedy completions) carry no payments
        if !outcome.has_payments || p.rho.is_none() {
            continue;
        }
        if p.payments.iter().any(|&(_, x)| x < -PAYMENT_TOLERANCE || !x.is_finite()) {
            problems.push(format!("negative payment for {}", p.candidate));
        }
        let cost = election.cost(p.candidate) as f64;
        let target = p.funded_fraction * cost;
        let tol = PAYMENT_TOLERANCE * cost.max(1.0);
        if (p.total_paid() - target).abs() > tol {
            problems.push(format!(
                "payments for '{}' sum to {} instead of {}",
                election.candidate_id(p.candidate),
                p.total_paid(),
                target
            ));
        }
        if p.funded_fraction > 1.0 + 1e-12 || p.funded_fraction <= 0.0 {
            problems.push(format!("funded fraction out of range for {}", p.candidate));
        }
    }
    if outcome.has_payments && outcome.unspent.iter().any(|&u| u < -1e-9 * u.abs().max(1.0)) {
        problems.push("negative unspent balance".into());
    }
    problems
}
