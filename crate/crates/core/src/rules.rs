//! Registry of selection rules with a uniform entry point.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{run_greedy_pb, run_mes_pb_add1, run_phragmen_approval};
use crate::bos::{run_bos_general, BosConfig};
use crate::constraint::Constraint;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::heuristics::{run_proprank_backtrack, run_proprank_rem};
use crate::mes::{run_mes_general, MesConfig};
use crate::outcome::Outcome;
use crate::proprank::{run_proprank, ProprankConfig};
use crate::search::SearchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Proprank,
    ProprankRem,
    ProprankBacktrack,
    Mes,
    Bos,
    Greedy,
    MesPb,
    Phragmen,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::Proprank,
        Rule::ProprankRem,
        Rule::ProprankBacktrack,
        Rule::Mes,
        Rule::Bos,
        Rule::Greedy,
        Rule::MesPb,
        Rule::Phragmen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Proprank => "proprank",
            Rule::ProprankRem => "proprank-rem",
            Rule::ProprankBacktrack => "proprank-backtrack",
            Rule::Mes => "mes",
            Rule::Bos => "bos",
            Rule::Greedy => "greedy",
            Rule::MesPb => "mes-pb",
            Rule::Phragmen => "phragmen",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::input(format!("unknown rule '{s}'")))
    }
}

/// Parameters shared by all rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleConfig {
    pub kappa: f64,
    pub sigma: usize,
    pub search: SearchConfig,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            kappa: 1.0,
            sigma: 2,
            search: SearchConfig::default(),
        }
    }
}

fn need_budget(rule: Rule, constraint: &Constraint) -> Result<u64> {
    constraint
        .budget()
        .ok_or_else(|| Error::contract(format!("{rule} only supports budget constraints")))
}

/// Runs `rule` on `election` under `constraint`.
pub fn run_rule(
    rule: Rule,
    election: &Election,
    constraint: &Constraint,
    config: &RuleConfig,
) -> Result<Outcome> {
    let pr = ProprankConfig {
        kappa: config.kappa,
        search: config.search,
    };
    match rule {
        Rule::Proprank => run_proprank(election, constraint, &pr),
        Rule::ProprankRem => run_proprank_rem(election, constraint, &pr),
        Rule::ProprankBacktrack => run_proprank_backtrack(election, constraint, config.sigma, &pr),
        Rule::Mes => run_mes_general(
            election,
            constraint,
            &MesConfig {
                kappa: config.kappa,
                search: config.search,
            },
        ),
        Rule::Bos => run_bos_general(
            election,
            constraint,
            &BosConfig {
                search: config.search,
            },
        ),
        Rule::Greedy => Ok(run_greedy_pb(election, need_budget(rule, constraint)?)),
        Rule::MesPb => Ok(run_mes_pb_add1(election, need_budget(rule, constraint)?)),
        Rule::Phragmen => run_phragmen_approval(election, constraint),
    }
}
