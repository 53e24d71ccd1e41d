//! Downward-closed feasibility families over candidate subsets.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::election::Election;
use crate::error::{Error, Result};

/// User-facing constraint description keyed by candidate ids.
///
/// This is also the JSON side-file schema, e.g. `{"kind": "budget", "budget": 5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    /// Every subset is feasible.
    Unconstrained,
    /// Total cost at most `budget`.
    Budget { budget: u64 },
    /// At most `k` candidates. Requires unit costs.
    Cardinality { k: usize },
    /// At most `cap` candidates from each group. Requires unit costs.
    PartitionMatroid { groups: Vec<PartitionGroup> },
    /// No pair may be selected together.
    ExclusionPairs { pairs: Vec<(String, String)> },
    /// Exactly the listed sets are feasible. Must be downward closed.
    ExplicitFamily { sets: Vec<Vec<String>> },
    /// All parts must hold.
    Conjunction { parts: Vec<ConstraintSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionGroup {
    pub members: Vec<String>,
    pub cap: usize,
}

impl ConstraintSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constraint spec serializes")
    }

    /// Resolves ids against `election` and validates the variant's preconditions.
    pub fn compile(&self, election: &Election) -> Result<Constraint> {
        Ok(match self {
            ConstraintSpec::Unconstrained => Constraint::Unconstrained,
            ConstraintSpec::Budget { budget } => Constraint::Budget {
                budget: *budget,
                costs: election.costs().to_vec(),
            },
            ConstraintSpec::Cardinality { k } => {
                require_unit_costs(election, "cardinality")?;
                Constraint::Cardinality { k: *k }
            }
            ConstraintSpec::PartitionMatroid { groups } => {
                require_unit_costs(election, "partition matroid")?;
                let mut group_of = vec![None; election.num_candidates()];
                let mut caps = Vec::with_capacity(groups.len());
                for (g, group) in groups.iter().enumerate() {
                    for c in election.resolve_candidates(&group.members)? {
                        if group_of[c].replace(g).is_some() {
                            return Err(Error::input(format!(
                                "candidate '{}' appears in more than one group",
                                election.candidate_id(c)
                            )));
                        }
                    }
                    caps.push(group.cap);
                }
                Constraint::Partition { group_of, caps }
            }
            ConstraintSpec::ExclusionPairs { pairs } => {
                let mut conflicts = vec![Vec::new(); election.num_candidates()];
                for (a, b) in pairs {
                    let ids = election.resolve_candidates(&[a, b])?;
                    let (a, b) = (ids[0], ids[1]);
                    if a == b {
                        return Err(Error::input(format!(
                            "exclusion pair repeats candidate '{}'",
                            election.candidate_id(a)
                        )));
                    }
                    conflicts[a].push(b);
                    conflicts[b].push(a);
                }
                Constraint::Exclusion { conflicts }
            }
            ConstraintSpec::ExplicitFamily { sets } => {
                let mut family = BTreeSet::new();
                for set in sets {
                    let mut idx = election.resolve_candidates(set)?;
                    idx.sort_unstable();
                    idx.dedup();
                    family.insert(idx);
                }
                Constraint::family(family)?
            }
            ConstraintSpec::Conjunction { parts } => Constraint::Conjunction(
                parts
                    .iter()
                    .map(|p| p.compile(election))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Adds every subset of every listed set, producing a downward-closed family.
    pub fn family_closure(sets: &[Vec<String>]) -> Vec<Vec<String>> {
        let mut out = BTreeSet::new();
        out.insert(Vec::new());
        for set in sets {
            let mut base: Vec<String> = set.clone();
            base.sort();
            base.dedup();
            if base.len() > 24 {
                // callers hitting this should not be using an explicit family
                panic!("explicit family member too large for closure");
            }
            for mask in 0u32..(1 << base.len()) {
                let subset: Vec<String> = base
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, c)| c.clone())
                    .collect();
                out.insert(subset);
            }
        }
        out.into_iter().collect()
    }
}

fn require_unit_costs(election: &Election, kind: &str) -> Result<()> {
    match (0..election.num_candidates()).find(|&c| election.cost(c) != 1) {
        Some(c) => Err(Error::contract(format!(
            "{kind} constraints assume unit costs, but '{}' costs {}",
            election.candidate_id(c),
            election.cost(c)
        ))),
        None => Ok(()),
    }
}

/// User-supplied feasibility predicate over candidate index sets.
pub type Predicate = Arc<dyn Fn(&[usize]) -> bool + Send + Sync>;

/// Compiled, index-based feasibility oracle.
#[derive(Clone)]
pub enum Constraint {
    Unconstrained,
    Budget { budget: u64, costs: Vec<u64> },
    Cardinality { k: usize },
    Partition { group_of: Vec<Option<usize>>, caps: Vec<usize> },
    Exclusion { conflicts: Vec<Vec<usize>> },
    Family { sets: BTreeSet<Vec<usize>> },
    Conjunction(Vec<Constraint>),
    /// Trusted to be downward closed; see [`Constraint::check_downward_closed`].
    Predicate(Predicate),
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Unconstrained => write!(f, "Unconstrained"),
            Constraint::Budget { budget, .. } => write!(f, "Budget({budget})"),
            Constraint::Cardinality { k } => write!(f, "Cardinality({k})"),
            Constraint::Partition { caps, .. } => write!(f, "Partition(caps={caps:?})"),
            Constraint::Exclusion { conflicts } => {
                let pairs = conflicts.iter().map(Vec::len).sum::<usize>() / 2;
                write!(f, "Exclusion({pairs} pairs)")
            }
            Constraint::Family { sets } => write!(f, "Family({} sets)", sets.len()),
            Constraint::Conjunction(parts) => f.debug_list().entries(parts).finish(),
            Constraint::Predicate(_) => write!(f, "Predicate"),
        }
    }
}

impl Constraint {
    /// Explicit family; fails unless it contains the empty set and is downward closed.
    pub fn family(sets: BTreeSet<Vec<usize>>) -> Result<Self> {
        if !sets.contains(&Vec::new()) {
            return Err(Error::input("explicit family must contain the empty set"));
        }
        for set in &sets {
            for skip in 0..set.len() {
                let mut sub = set.clone();
                sub.remove(skip);
                if !sets.contains(&sub) {
                    return Err(Error::input(format!(
                        "explicit family is not downward closed: {set:?} present but {sub:?} missing"
                    )));
                }
            }
        }
        Ok(Constraint::Family { sets })
    }

    pub fn predicate(f: impl Fn(&[usize]) -> bool + Send + Sync + 'static) -> Self {
        Constraint::Predicate(Arc::new(f))
    }

    /// Whether `set` (distinct candidate indices, any order) is feasible.
    pub fn is_feasible(&self, set: &[usize]) -> bool {
        match self {
            Constraint::Unconstrained => true,
            Constraint::Budget { budget, costs } => {
                set.iter().map(|&c| costs[c]).sum::<u64>() <= *budget
            }
            Constraint::Cardinality { k } => set.len() <= *k,
            Constraint::Partition { group_of, caps } => {
                let mut used = vec![0usize; caps.len()];
                for &c in set {
                    if let Some(g) = group_of[c] {
                        used[g] += 1;
                        if used[g] > caps[g] {
                            return false;
                        }
                    }
                }
                true
            }
            Constraint::Exclusion { conflicts } => set
                .iter()
                .all(|&a| conflicts[a].iter().all(|b| !set.contains(b))),
            Constraint::Family { sets } => {
                let mut key = set.to_vec();
                key.sort_unstable();
                sets.contains(&key)
            }
            Constraint::Conjunction(parts) => parts.iter().all(|p| p.is_feasible(set)),
            Constraint::Predicate(f) => f(set),
        }
    }

    /// Feasibility of `set ∪ {c}` for `c ∉ set`.
    pub fn can_add(&self, set: &[usize], c: usize) -> bool {
        match self {
            Constraint::Unconstrained => true,
            Constraint::Budget { budget, costs } => {
                set.iter().map(|&x| costs[x]).sum::<u64>() + costs[c] <= *budget
            }
            Constraint::Cardinality { k } => set.len() < *k,
            Constraint::Exclusion { conflicts } => {
                self.is_feasible(set) && conflicts[c].iter().all(|b| !set.contains(b))
            }
            _ => {
                let mut buf = Vec::with_capacity(set.len() + 1);
                buf.extend_from_slice(set);
                buf.push(c);
                self.is_feasible(&buf)
            }
        }
    }

    /// Candidates in `pool \ selected` that can be added to `selected`.
    pub fn available(&self, selected: &[usize], pool: &[usize]) -> Result<Vec<usize>> {
        if !self.is_feasible(selected) {
            return Err(Error::contract("selected set is infeasible"));
        }
        Ok(pool
            .iter()
            .copied()
            .filter(|c| !selected.contains(c) && self.can_add(selected, *c))
            .collect())
    }

    /// Feasibility check by candidate ids.
    pub fn is_feasible_ids<S: AsRef<str>>(&self, election: &Election, ids: &[S]) -> Result<bool> {
        let mut idx = election.resolve_candidates(ids)?;
        idx.sort_unstable();
        idx.dedup();
        Ok(self.is_feasible(&idx))
    }

    /// Budget value when this is a plain budget constraint.
    pub fn budget(&self) -> Option<u64> {
        match self {
            Constraint::Budget { budget, .. } => Some(*budget),
            _ => None,
        }
    }

    /// Whether the family is known to be a matroid (greedy is exact).
    pub fn is_matroid(&self) -> bool {
        match self {
            Constraint::Unconstrained
            | Constraint::Cardinality { .. }
            | Constraint::Partition { .. } => true,
            Constraint::Conjunction(parts) => parts.len() == 1 && parts[0].is_matroid(),
            _ => false,
        }
    }

    /// Exhaustively checks downward closure over `m` candidates (m ≤ 20).
    pub fn check_downward_closed(&self, m: usize) -> Result<bool> {
        if m > 20 {
            return Err(Error::TooLarge(format!(
                "downward-closure check over {m} candidates"
            )));
        }
        let mut buf = Vec::with_capacity(m);
        for mask in 0u32..(1 << m) {
            mask_to_set(mask as u64, &mut buf);
            if !self.is_feasible(&buf) {
                continue;
            }
            for &c in &buf {
                let sub = mask & !(1 << c);
                let mut sub_set = Vec::new();
                mask_to_set(sub as u64, &mut sub_set);
                if !self.is_feasible(&sub_set) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Feasibility oracle over candidate bitmasks (at most 64 candidates).
pub(crate) enum MaskOracle<'a> {
    Any,
    Budget { budget: u64, costs: &'a [u64] },
    Cardinality { k: u32 },
    Partition { group_of: &'a [Option<usize>], members: Vec<u64>, caps: &'a [usize] },
    Exclusion { conflicts: Vec<u64> },
    All(Vec<MaskOracle<'a>>),
    Generic(&'a Constraint),
}

impl<'a> MaskOracle<'a> {
    pub(crate) fn new(constraint: &'a Constraint) -> Self {
        match constraint {
            Constraint::Unconstrained => MaskOracle::Any,
            Constraint::Budget { budget, costs } => MaskOracle::Budget { budget: *budget, costs },
            Constraint::Cardinality { k } => MaskOracle::Cardinality {
                k: (*k).min(64) as u32,
            },
            Constraint::Partition { group_of, caps } if group_of.len() <= 64 => {
                let mut members = vec![0u64; caps.len()];
                for (c, g) in group_of.iter().enumerate() {
                    if let Some(g) = g {
                        members[*g] |= 1 << c;
                    }
                }
                MaskOracle::Partition {
                    group_of,
                    members,
                    caps,
                }
            }
            Constraint::Exclusion { conflicts } if conflicts.len() <= 64 => MaskOracle::Exclusion {
                conflicts: conflicts
                    .iter()
                    .map(|list| list.iter().fold(0u64, |m, &b| m | 1 << b))
                    .collect(),
            },
            Constraint::Conjunction(parts) => MaskOracle::All(parts.iter().map(MaskOracle::new).collect()),
            other => MaskOracle::Generic(other),
        }
    }

    /// Feasibility of `mask ∪ {c}` given that `mask` is feasible and `c ∉ mask`.
    pub(crate) fn can_add(&self, mask: u64, c: usize) -> bool {
        match self {
            MaskOracle::Any => true,
            MaskOracle::Budget { budget, costs } => {
                let mut total = costs[c];
                let mut rest = mask;
                while rest != 0 {
                    total += costs[rest.trailing_zeros() as usize];
                    rest &= rest - 1;
                }
                total <= *budget
            }
            MaskOracle::Cardinality { k } => mask.count_ones() < *k,
            MaskOracle::Partition {
                group_of,
                members,
                caps,
            } => match group_of[c] {
                Some(g) => ((mask & members[g]).count_ones() as usize) < caps[g],
                None => true,
            },
            MaskOracle::Exclusion { conflicts } => conflicts[c] & mask == 0,
            MaskOracle::All(parts) => parts.iter().all(|p| p.can_add(mask, c)),
            MaskOracle::Generic(constraint) => {
                let mut buf = Vec::with_capacity(mask.count_ones() as usize + 1);
                mask_to_set(mask, &mut buf);
                constraint.can_add(&buf, c)
            }
        }
    }
}

/// Writes the members of a bitmask into `buf` in increasing order.
pub fn mask_to_set(mask: u64, buf: &mut Vec<usize>) {
    buf.clear();
    let mut rest = mask;
    while rest != 0 {
        let c = rest.trailing_zeros() as usize;
        buf.push(c);
        rest &= rest - 1;
    }
}
