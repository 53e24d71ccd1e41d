//! Election data model: voters, candidates, integer costs and sparse utilities.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compares ids so that embedded digit runs order numerically ("p2" < "p10").
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    let (mut xa, mut xb) = (a.as_bytes(), b.as_bytes());
    loop {
        match (xa.first(), xb.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(ca), Some(cb)) if ca.is_ascii_digit() && cb.is_ascii_digit() => {
                let la = xa.iter().take_while(|c| c.is_ascii_digit()).count();
                let lb = xb.iter().take_while(|c| c.is_ascii_digit()).count();
                let da = trim_zeros(&xa[..la]);
                let db = trim_zeros(&xb[..lb]);
                let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db));
                if ord != Ordering::Equal {
                    return ord;
                }
                xa = &xa[la..];
                xb = &xb[lb..];
            }
            (Some(ca), Some(cb)) => {
                if ca != cb {
                    return ca.cmp(cb);
                }
                xa = &xa[1..];
                xb = &xb[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let skip = digits.iter().take_while(|&&d| d == b'0').count();
    &digits[skip..]
}

/// Serializable, unvalidated election description keyed by string ids.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RawElection {
    pub voters: Vec<String>,
    pub candidates: Vec<RawCandidate>,
    /// voter id -> candidate id -> utility
    pub utilities: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawCandidate {
    pub id: String,
    pub cost: i64,
}

/// A single problem found by [`validate_election`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnsupportedCandidate { candidate: String },
    NonpositiveCost { candidate: String, cost: i64 },
    NegativeUtility { voter: String, candidate: String, utility: f64 },
    NonfiniteUtility { voter: String, candidate: String },
    UnknownVoter { voter: String },
    UnknownCandidate { candidate: String },
    DuplicateVoter { voter: String },
    DuplicateCandidate { candidate: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a raw election against the model assumptions without failing fast.
pub fn validate_election(raw: &RawElection) -> ValidationReport {
    let mut violations = Vec::new();
    let mut voters = BTreeSet::new();
    for v in &raw.voters {
        if !voters.insert(v.as_str()) {
            violations.push(Violation::DuplicateVoter { voter: v.clone() });
        }
    }
    let mut candidates = BTreeSet::new();
    for c in &raw.candidates {
        if !candidates.insert(c.id.as_str()) {
            violations.push(Violation::DuplicateCandidate {
                candidate: c.id.clone(),
            });
        }
        if c.cost <= 0 {
            violations.push(Violation::NonpositiveCost {
                candidate: c.id.clone(),
                cost: c.cost,
            });
        }
    }
    let mut supported = BTreeSet::new();
    for (voter, row) in &raw.utilities {
        if !voters.contains(voter.as_str()) {
            violations.push(Violation::UnknownVoter {
                voter: voter.clone(),
            });
        }
        for (cand, &u) in row {
            if !candidates.contains(cand.as_str()) {
                violations.push(Violation::UnknownCandidate {
                    candidate: cand.clone(),
                });
            } else if !u.is_finite() {
                violations.push(Violation::NonfiniteUtility {
                    voter: voter.clone(),
                    candidate: cand.clone(),
                });
            } else if u < 0.0 {
                violations.push(Violation::NegativeUtility {
                    voter: voter.clone(),
                    candidate: cand.clone(),
                    utility: u,
                });
            } else if u > 0.0 {
                supported.insert(cand.as_str());
            }
        }
    }
    for c in &raw.candidates {
        if !supported.contains(c.id.as_str()) {
            violations.push(Violation::UnsupportedCandidate {
                candidate: c.id.clone(),
            });
        }
    }
    ValidationReport { violations }
}

/// Assigns each approved candidate a utility equal to its cost.
pub fn derive_cost_utilities(
    approvals: &BTreeMap<String, BTreeSet<String>>,
    costs: &BTreeMap<String, u64>,
) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut out = BTreeMap::new();
    for (voter, approved) in approvals {
        let mut row = BTreeMap::new();
        for c in approved {
            let cost = costs
                .get(c)
                .ok_or_else(|| Error::input(format!("approval of unknown candidate '{c}'")))?;
            row.insert(c.clone(), *cost as f64);
        }
        out.insert(voter.clone(), row);
    }
    Ok(out)
}

/// Immutable, index-based election.
///
/// Candidates may lack supporters (useful for hand-built axiom instances);
/// selection rules reject such elections via [`Election::require_supported`].
#[derive(Debug, Clone)]
pub struct Election {
    voter_ids: Vec<String>,
    candidate_ids: Vec<String>,
    costs: Vec<u64>,
    ballots: Vec<Vec<(usize, f64)>>,
    supporters: Vec<Vec<(usize, f64)>>,
    utility_sums: Vec<f64>,
    u_max: f64,
    tie_rank: Vec<usize>,
    candidate_index: HashMap<String, usize>,
    voter_index: HashMap<String, usize>,
}

impl Election {
    /// Builds an election from a raw description. Zero utilities are dropped;
    /// unsupported candidates are allowed.
    pub fn from_raw(raw: &RawElection) -> Result<Self> {
        let report = validate_election(raw);
        if let Some(v) = report
            .violations
            .iter()
            .find(|v| !matches!(v, Violation::UnsupportedCandidate { .. }))
        {
            return Err(Error::input(format!("invalid election: {v:?}")));
        }
        let mut b = ElectionBuilder::new();
        for v in &raw.voters {
            b.voter(v);
        }
        for c in &raw.candidates {
            b.candidate(&c.id, c.cost as u64);
        }
        for (v, row) in &raw.utilities {
            for (c, &u) in row {
                b.utility(v, c, u);
            }
        }
        b.build()
    }

    pub fn to_raw(&self) -> RawElection {
        let mut utilities = BTreeMap::new();
        for (i, ballot) in self.ballots.iter().enumerate() {
            let row: BTreeMap<String, f64> = ballot
                .iter()
                .map(|&(c, u)| (self.candidate_ids[c].clone(), u))
                .collect();
            utilities.insert(self.voter_ids[i].clone(), row);
        }
        RawElection {
            voters: self.voter_ids.clone(),
            candidates: self
                .candidate_ids
                .iter()
                .zip(&self.costs)
                .map(|(id, &cost)| RawCandidate {
                    id: id.clone(),
                    cost: cost as i64,
                })
                .collect(),
            utilities,
        }
    }

    pub fn num_voters(&self) -> usize {
        self.voter_ids.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.candidate_ids.len()
    }

    pub fn voter_id(&self, i: usize) -> &str {
        &self.voter_ids[i]
    }

    pub fn candidate_id(&self, c: usize) -> &str {
        &self.candidate_ids[c]
    }

    pub fn voter_ids(&self) -> &[String] {
        &self.voter_ids
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn candidate_index(&self, id: &str) -> Option<usize> {
        self.candidate_index.get(id).copied()
    }

    pub fn voter_index(&self, id: &str) -> Option<usize> {
        self.voter_index.get(id).copied()
    }

    /// Resolves candidate ids to indices, failing on unknown ids.
    pub fn resolve_candidates<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.candidate_index(id.as_ref())
                    .ok_or_else(|| Error::input(format!("unknown candidate id '{}'", id.as_ref())))
            })
            .collect()
    }

    pub fn cost(&self, c: usize) -> u64 {
        self.costs[c]
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    pub fn total_cost(&self, set: &[usize]) -> u64 {
        set.iter().map(|&c| self.costs[c]).sum()
    }

    /// Nonzero utilities of voter `i`, sorted by candidate index.
    pub fn ballot(&self, i: usize) -> &[(usize, f64)] {
        &self.ballots[i]
    }

    /// Supporters of `c` as `(voter, utility)`, sorted by ascending utility then voter.
    pub fn supporters(&self, c: usize) -> &[(usize, f64)] {
        &self.supporters[c]
    }

    pub fn utility(&self, i: usize, c: usize) -> f64 {
        let ballot = &self.ballots[i];
        match ballot.binary_search_by_key(&c, |&(cand, _)| cand) {
            Ok(pos) => ballot[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Sum of utilities over all voters for candidate `c`.
    pub fn utility_sum(&self, c: usize) -> f64 {
        self.utility_sums[c]
    }

    /// Additive satisfaction of voter `i` with `set`.
    pub fn satisfaction(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&c| self.utility(i, c)).fold(0.0, |acc, u| acc + u)
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Position of `c` in the deterministic tie-breaking order.
    pub fn tie_rank(&self, c: usize) -> usize {
        self.tie_rank[c]
    }

    /// True when every stored utility is exactly one.
    pub fn is_unit_approval(&self) -> bool {
        self.ballots.iter().flatten().all(|&(_, u)| u == 1.0)
    }

    pub fn unsupported_candidates(&self) -> Vec<usize> {
        (0..self.num_candidates())
            .filter(|&c| self.supporters[c].is_empty())
            .collect()
    }

    /// Fails with a contract error when some candidate has no supporter.
    pub fn require_supported(&self) -> Result<()> {
        match self.unsupported_candidates().first() {
            Some(&c) => Err(Error::contract(format!(
                "candidate '{}' has no supporter",
                self.candidate_ids[c]
            ))),
            None => Ok(()),
        }
    }

    /// Returns a copy with every utility multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::input("scale factor must be positive and finite"));
        }
        let mut raw = self.to_raw();
        for row in raw.utilities.values_mut() {
            for u in row.values_mut() {
                *u *= factor;
            }
        }
        Election::from_raw(&raw)
    }
}

/// Incremental constructor for [`Election`].
#[derive(Debug, Default, Clone)]
pub struct ElectionBuilder {
    voters: Vec<String>,
    candidates: Vec<(String, u64)>,
    entries: Vec<(String, String, f64)>,
}

impl ElectionBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn voter(&mut self, id: impl Into<String>) -> &mut Self {
        self.voters.push(id.into());
        self
    }

    pub fn candidate(&mut self, id: impl Into<String>, cost: u64) -> &mut Self {
        self.candidates.push((id.into(), cost));
        self
    }

    pub fn utility(
        &mut self,
        voter: impl Into<String>,
        candidate: impl Into<String>,
        u: f64,
    ) -> &mut Self {
        self.entries.push((voter.into(), candidate.into(), u));
        self
    }

    pub fn build(&self) -> Result<Election> {
        let mut voter_index = HashMap::new();
        for (i, v) in self.voters.iter().enumerate() {
            if voter_index.insert(v.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate voter id '{v}'")));
            }
        }
        let mut candidate_index = HashMap::new();
        for (c, (id, cost)) in self.candidates.iter().enumerate() {
            if candidate_index.insert(id.clone(), c).is_some() {
                return Err(Error::input(format!("duplicate candidate id '{id}'")));
            }
            if *cost == 0 {
                return Err(Error::input(format!("candidate '{id}' has nonpositive cost")));
            }
        }
        let n = self.voters.len();
        let m = self.candidates.len();
        let mut ballots: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (v, c, u) in &self.entries {
            let i = *voter_index
                .get(v)
                .ok_or_else(|| Error::input(format!("unknown voter id '{v}'")))?;
            let j = *candidate_index
                .get(c)
                .ok_or_else(|| Error::input(format!("unknown candidate id '{c}'")))?;
            if !u.is_finite() || *u < 0.0 {
                return Err(Error::input(format!(
                    "utility of '{v}' for '{c}' must be finite and nonnegative"
                )));
            }
            if *u > 0.0 {
                ballots[i].insert(j, *u);
            } else {
                ballots[i].remove(&j);
            }
        }
        let ballots: Vec<Vec<(usize, f64)>> = ballots
            .into_iter()
            .map(|b| b.into_iter().collect())
            .collect();
        let mut supporters = vec![Vec::new(); m];
        for (i, ballot) in ballots.iter().enumerate() {
            for &(c, u) in ballot {
                supporters[c].push((i, u));
            }
        }
        for list in &mut supporters {
            list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        let utility_sums = supporters
            .iter()
            .map(|s| s.iter().map(|&(_, u)| u).sum())
            .collect();
        let u_max = ballots
            .iter()
            .flatten()
            .map(|&(_, u)| u)
            .fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            compare_ids(&self.candidates[a].0, &self.candidates[b].0).then(a.cmp(&b))
        });
        let mut tie_rank = vec![0; m];
        for (rank, &c) in order.iter().enumerate() {
            tie_rank[c] = rank;
        }
        Ok(Election {
            voter_ids: self.voters.clone(),
            candidate_ids: self.candidates.iter().map(|(id, _)| id.clone()).collect(),
            costs: self.candidates.iter().map(|&(_, cost)| cost).collect(),
            ballots,
            supporters,
            utility_sums,
            u_max,
            tie_rank,
            candidate_index,
            voter_index,
        })
    }
}
