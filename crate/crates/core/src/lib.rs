//! Proportional selection rules for committees and participatory budgets
//! under general feasibility constraints.
//!
//! The central rule is [`proprank::run_proprank`], a continuous-time
//! price-and-buy process in which every voter earns money at unit rate and
//! candidates are bought as soon as their supporters can afford them at the
//! best available price. Alongside it live two heuristic refinements, the
//! generalized Method of Equal Shares and BOS, classic baselines, exhaustive
//! axiom checkers, metrics and PabuLib I/O.

pub mod axioms;
pub mod baselines;
pub mod bos;
pub mod constraint;
pub mod election;
pub mod error;
pub mod generator;
pub mod heuristics;
pub mod mes;
pub mod metrics;
pub mod outcome;
pub mod pabulib;
pub mod proprank;
pub mod rules;
pub mod search;

pub use constraint::{Constraint, ConstraintSpec};
pub use election::{Election, ElectionBuilder};
pub use error::{Error, Result};
pub use outcome::{Outcome, Purchase, Ranking, Removal};
pub use rules::{run_rule, Rule, RuleConfig};
