//! Evaluation metrics and the corpus benchmark harness.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::axioms::check_ejr_plus_up_to_one;
use crate::baselines::run_greedy_pb;
use crate::constraint::ConstraintSpec;
use crate::election::Election;
use crate::error::{Error, Result};
use crate::pabulib::{read_pabulib, to_election, UtilityMode};
use crate::rules::{run_rule, Rule, RuleConfig};

/// Average total utility over voters, optionally divided by a reference outcome's.
pub fn cost_satisfaction(
    election: &Election,
    w: &[usize],
    normalize_against: Option<&[usize]>,
) -> Result<f64> {
    let raw = average_satisfaction(election, w);
    match normalize_against {
        None => Ok(raw),
        Some(reference) => {
            let base = average_satisfaction(election, reference);
            if base == 0.0 {
                Err(Error::UndefinedNormalization(
                    "reference outcome gives zero satisfaction".into(),
                ))
            } else {
                Ok(raw / base)
            }
        }
    }
}

fn average_satisfaction(election: &Election, w: &[usize]) -> f64 {
    let n = election.num_voters();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|i| election.satisfaction(i, w)).sum::<f64>() / n as f64
}

/// Fraction of voters with zero utility for `w`.
pub fn exclusion_ratio(election: &Election, w: &[usize]) -> f64 {
    let n = election.num_voters();
    if n == 0 {
        return 0.0;
    }
    let excluded = (0..n)
        .filter(|&i| election.satisfaction(i, w) == 0.0)
        .count();
    excluded as f64 / n as f64
}

/// Project-count buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Bucket {
    Small,
    Medium,
    Large,
}

impl Bucket {
    pub fn of(projects: usize) -> Bucket {
        match projects {
            0..=10 => Bucket::Small,
            11..=30 => Bucket::Medium,
            _ => Bucket::Large,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Small => "<=10",
            Bucket::Medium => "11-30",
            Bucket::Large => ">30",
        }
    }
}

/// A budgeting instance ready for benchmarking.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub election: Election,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub instance_id: String,
    pub rule: String,
    pub n_voters: usize,
    pub n_projects: usize,
    pub budget: u64,
    pub cost_sat_norm: f64,
    pub exclusion_ratio: f64,
    pub ejrplus_violations: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub instance_id: String,
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketSummary {
    pub bucket: Bucket,
    pub rule: String,
    pub instances: usize,
    pub cost_sat_norm: f64,
    pub exclusion_ratio: f64,
    pub ejrplus_violations: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<MetricRow>,
    pub summary: Vec<BucketSummary>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub rules: Vec<Rule>,
    pub rule_config: RuleConfig,
    /// Record wall-clock runtimes (otherwise reported as zero for reproducibility).
    pub timing: bool,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            rules: Rule::ALL.to_vec(),
            rule_config: RuleConfig::default(),
            timing: false,
            jobs: 0,
        }
    }
}

fn evaluate(instance: &Instance, config: &BenchConfig) -> (Vec<MetricRow>, Vec<Failure>) {
    let e = &instance.election;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let fail = |rule: Rule, message: String| Failure {
        instance_id: instance.id.clone(),
        rule: rule.name().to_string(),
        message,
    };
    let constraint = match (ConstraintSpec::Budget {
        budget: instance.budget,
    })
    .compile(e)
    {
        Ok(c) => c,
        Err(err) => {
            for &rule in &config.rules {
                failures.push(fail(rule, err.to_string()));
            }
            return (rows, failures);
        }
    };
    let reference = run_greedy_pb(e, instance.budget).selected();
    for &rule in &config.rules {
        let start = Instant::now();
        let outcome = run_rule(rule, e, &constraint, &config.rule_config);
        let elapsed = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(o) => o,
            Err(err) => {
                failures.push(fail(rule, err.to_string()));
                continue;
            }
        };
        let w = outcome.selected();
        let cost_sat_norm = match cost_satisfaction(e, &w, Some(&reference)) {
            Ok(v) => v,
            Err(err) => {
                failures.push(fail(rule, err.to_string()));
                continue;
            }
        };
        rows.push(MetricRow {
            instance_id: instance.id.clone(),
            rule: rule.name().to_string(),
            n_voters: e.num_voters(),
            n_projects: e.num_candidates(),
            budget: instance.budget,
            cost_sat_norm,
            exclusion_ratio: exclusion_ratio(e, &w),
            ejrplus_violations: check_ejr_plus_up_to_one(e, instance.budget, &w).violations.len(),
            runtime_s: if config.timing { elapsed } else { 0.0 },
        });
    }
    (rows, failures)
}

/// Reads every `.pb` file in `dir`, sorted by file name.
///
/// Files that fail to parse are reported as failures under the rule name `load`.
pub fn load_corpus(dir: impl AsRef<Path>, mode: UtilityMode) -> Result<(Vec<Instance>, Vec<Failure>)> {
    let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pb"))
        .collect();
    paths.sort();
    let mut instances = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match read_pabulib(&path).and_then(|inst| {
            let budget = inst.budget;
            to_election(&inst, mode).map(|conv| (conv.election, budget))
        }) {
            Ok((election, budget)) => instances.push(Instance {
                id,
                election,
                budget,
            }),
            Err(err) => failures.push(Failure {
                instance_id: id,
                rule: "load".into(),
                message: err.to_string(),
            }),
        }
    }
    Ok((instances, failures))
}

/// Runs every rule on every instance and aggregates by project-count bucket.
pub fn benchmark(instances: &[Instance], config: &BenchConfig) -> Result<BenchReport> {
    let work = || -> Vec<(Vec<MetricRow>, Vec<Failure>)> {
        instances.par_iter().map(|inst| evaluate(inst, config)).collect()
    };
    let results = if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::input(format!("cannot start worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let mut report = BenchReport::default();
    for (rows, failures) in results {
        report.rows.extend(rows);
        report.failures.extend(failures);
    }
    let order = |rule: &str| Rule::ALL.iter().position(|r| r.name() == rule).unwrap_or(usize::MAX);
    report
        .rows
        .sort_by(|a, b| a.instance_id.cmp(&b.instance_id).then(order(&a.rule).cmp(&order(&b.rule))));
    report
        .failures
        .sort_by(|a, b| a.instance_id.cmp(&b.instance_id).then(order(&a.rule).cmp(&order(&b.rule))));
    for bucket in [Bucket::Small, Bucket::Medium, Bucket::Large] {
        for &rule in &config.rules {
            let rows: Vec<&MetricRow> = report
                .rows
                .iter()
                .filter(|r| r.rule == rule.name() && Bucket::of(r.n_projects) == bucket)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let k = rows.len() as f64;
            report.summary.push(BucketSummary {
                bucket,
                rule: rule.name().to_string(),
                instances: rows.len(),
                cost_sat_norm: rows.iter().map(|r| r.cost_sat_norm).sum::<f64>() / k,
                exclusion_ratio: rows.iter().map(|r| r.exclusion_ratio).sum::<f64>() / k,
                ejrplus_violations: rows.iter().map(|r| r.ejrplus_violations as f64).sum::<f64>() / k,
            });
        }
    }
    Ok(report)
}

impl BenchReport {
    /// Per-instance rows as CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::input(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "instance_id",
                "rule",
                "n_voters",
                "n_projects",
                "budget",
                "cost_sat_norm",
                "exclusion_ratio",
                "ejrplus_violations",
                "runtime_s",
            ])
            .map_err(|e| Error::input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Bucket averages laid out as a fixed-width table.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>5} {:>10} {:>10} {:>10}",
            "rule", "bucket", "count", "cost_sat", "excluded", "ejr+"
        );
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{:<20} {:>6} {:>5} {:>10.4} {:>10.4} {:>10.3}",
                s.rule,
                s.bucket.label(),
                s.instances,
                s.cost_sat_norm,
                s.exclusion_ratio,
                s.ejrplus_violations
            );
        }
        out
    }
}
