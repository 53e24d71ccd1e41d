//! Restart and backtracking variants of PropRank that aim to leave less money unspent.

use crate::constraint::Constraint;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::proprank::{Engine, ProprankConfig};

/// PropRank that restarts whenever a candidate is removed, excluding that
/// candidate from the scaling computation in all later executions.
pub fn run_proprank_rem(
    election: &Election,
    constraint: &Constraint,
    config: &ProprankConfig,
) -> Result<Outcome> {
    let m = election.num_candidates();
    let mut excluded = vec![false; m];
    let mut restarts = 0;
    'restart: loop {
        let mut engine = Engine::new(election, constraint, config)?;
        let in_pool = |c: usize| !excluded[c];
        while let Some(ev) = engine.next_event(&in_pool)? {
            let dropped = engine.commit(ev);
            if let Some(&c) = dropped.iter().find(|&&c| !excluded[c]) {
                restarts += 1;
                if restarts > m {
                    return Err(Error::internal("restart limit exceeded"));
                }
                excluded[c] = true;
                continue 'restart;
            }
        }
        let mut outcome = engine.into_outcome("proprank-rem");
        outcome.stats.executions = restarts + 1;
        return Ok(outcome);
    }
}

/// PropRank with a waiting set of candidates allowed to influence scalings.
///
/// Each execution first mirrors the previous one (scalings from the previous
/// waiting set) and switches to the current waiting set the first time that
/// set yields a strictly earlier purchase. After each execution the selected
/// candidates join the waiting set (each at most `sigma` times) and the
/// earliest-removed waiting candidate leaves it.
pub fn run_proprank_backtrack(
    election: &Election,
    constraint: &Constraint,
    sigma: usize,
    config: &ProprankConfig,
) -> Result<Outcome> {
    if sigma == 0 {
        return Err(Error::input("sigma must be at least 1"));
    }
    let m = election.num_candidates();
    let mut wait = vec![true; m];
    let mut entries = vec![1usize; m];
    let mut previous: Option<Vec<bool>> = None;
    let limit = sigma * m + 1;
    for run in 1..=limit {
        let used = wait.clone();
        let mut engine = Engine::new(election, constraint, config)?;
        let current = |c: usize| used[c];
        if let Some(prev) = &previous {
            let mirror = |c: usize| prev[c];
            while let Some(old) = engine.next_event(&mirror)? {
                let new = engine
                    .next_event(&current)?
                    .ok_or_else(|| Error::internal("waiting-set run ended early"))?;
                let tol = config.search.rel_tol.max(1e-12) * old.time.abs().max(1.0);
                if new.time < old.time - tol {
                    engine.commit(new);
                    break;
                }
                engine.commit(old);
            }
        }
        while let Some(ev) = engine.next_event(&current)? {
            engine.commit(ev);
        }
        let selected = engine.selected.clone();
        let mut in_selection = vec![false; m];
        for &c in &selected {
            in_selection[c] = true;
            if !wait[c] && entries[c] < sigma {
                wait[c] = true;
                entries[c] += 1;
            }
        }
        let earliest = engine
            .removed
            .iter()
            .map(|r| r.candidate)
            .find(|&c| wait[c] && !in_selection[c]);
        match earliest {
            None => {
                let mut outcome = engine.into_outcome("proprank-backtrack");
                outcome.stats.executions = run;
                return Ok(outcome);
            }
            Some(c) => {
                previous = Some(used);
                wait[c] = false;
            }
        }
    }
    Err(Error::internal(format!(
        "backtracking did not settle within {limit} executions"
    )))
}
