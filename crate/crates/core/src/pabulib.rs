//! Reading PabuLib `.pb` files and writing outcomes as JSON or CSV.
//!
//! A `.pb` file has three sections, each introduced by a line holding only its
//! name (`META`, `PROJECTS`, `VOTES`), followed by a `;`-separated header row
//! and data rows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSpec;
use crate::election::{Election, ElectionBuilder};
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Purchase, Removal, RunStats};

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub id: String,
    pub cost: u64,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub voter_id: String,
    pub projects: Vec<String>,
    /// Scores aligned with `projects`, when the file has a `points` column.
    pub points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PabulibInstance {
    /// All META entries in file order, unknown keys included.
    pub meta: Vec<(String, String)>,
    pub budget: u64,
    pub projects: Vec<Project>,
    pub votes: Vec<Vote>,
}

impl PabulibInstance {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_points(&self) -> bool {
        self.votes.iter().any(|v| v.points.is_some())
    }
}

struct Section {
    /// 1-based line number of the header row.
    header_line: usize,
    text: String,
}

fn split_sections(text: &str) -> Result<HashMap<&'static str, Section>> {
    let mut sections: HashMap<&'static str, Section> = HashMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let line_no = idx + 1;
        let name = match line.trim() {
            "META" => Some("META"),
            "PROJECTS" => Some("PROJECTS"),
            "VOTES" => Some("VOTES"),
            _ => None,
        };
        if let Some(name) = name {
            if sections.contains_key(name) {
                return Err(Error::parse(line_no, format!("duplicate {name} section")));
            }
            sections.insert(
                name,
                Section {
                    header_line: line_no + 1,
                    text: String::new(),
                },
            );
            current = Some(name);
            continue;
        }
        match current {
            Some(name) => {
                let sec = sections.get_mut(name).expect("inserted above");
                sec.text.push_str(line);
                sec.text.push('\n');
            }
            None if line.trim().is_empty() => {}
            None => return Err(Error::parse(line_no, "content before the META section")),
        }
    }
    for name in ["META", "PROJECTS", "VOTES"] {
        if !sections.contains_key(name) {
            let last = text.lines().count().max(1);
            return Err(Error::parse(last, format!("missing {name} section")));
        }
    }
    Ok(sections)
}

/// Header names and data rows with their 1-based line numbers.
fn read_table(section: &Section) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .from_reader(section.text.as_bytes());
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map_or(section.header_line, |p| section.header_line + p.line() as usize - 1);
            Error::parse(line, e.to_string())
        })?;
        let line = section.header_line
            + record.position().map_or(0, |p| p.line() as usize - 1);
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        match header {
            None => header = Some(fields.iter().map(|f| f.to_lowercase()).collect()),
            Some(ref h) => {
                if fields.len() > h.len() {
                    return Err(Error::parse(
                        line,
                        format!("expected {} fields, found {}", h.len(), fields.len()),
                    ));
                }
                rows.push((line, fields));
            }
        }
    }
    let header = header.ok_or_else(|| Error::parse(section.header_line, "missing header row"))?;
    Ok((header, rows))
}

fn column(header: &[String], name: &str, line: usize) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::parse(line, format!("missing '{name}' column")))
}

fn parse_integral(value: &str, what: &str, line: usize) -> Result<u64> {
    if let Ok(v) = value.parse::<u64>() {
        return Ok(v);
    }
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 => Ok(v as u64),
        Ok(_) => Err(Error::parse(line, format!("{what} must be a nonnegative integer, got '{value}'"))),
        Err(_) => Err(Error::parse(line, format!("non-numeric {what} '{value}'"))),
    }
}

/// Parses a `.pb` document.
pub fn parse_pabulib(text: &str) -> Result<PabulibInstance> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let sections = split_sections(text)?;

    let meta_sec = &sections["META"];
    let (meta_header, meta_rows) = read_table(meta_sec)?;
    let key_col = column(&meta_header, "key", meta_sec.header_line)?;
    let value_col = column(&meta_header, "value", meta_sec.header_line)?;
    let mut meta = Vec::new();
    let mut meta_lines = HashMap::new();
    for (line, fields) in &meta_rows {
        let key = fields.get(key_col).cloned().unwrap_or_default();
        let value = fields.get(value_col).cloned().unwrap_or_default();
        meta_lines.insert(key.clone(), *line);
        meta.push((key, value));
    }
    let lookup = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let budget_line = meta_lines.get("budget").copied().unwrap_or(meta_sec.header_line);
    let budget_text = lookup("budget").ok_or_else(|| Error::parse(budget_line, "META lacks 'budget'"))?;
    let budget_value: f64 = budget_text
        .replace(',', ".")
        .parse()
        .map_err(|_| Error::parse(budget_line, format!("non-numeric budget '{budget_text}'")))?;
    if !(budget_value.is_finite() && budget_value > 0.0) {
        return Err(Error::parse(budget_line, "budget must be positive"));
    }
    let budget = budget_value.floor() as u64;

    let proj_sec = &sections["PROJECTS"];
    let (proj_header, proj_rows) = read_table(proj_sec)?;
    let id_col = column(&proj_header, "project_id", proj_sec.header_line)?;
    let cost_col = column(&proj_header, "cost", proj_sec.header_line)?;
    let name_col = proj_header.iter().position(|h| h == "name");
    let mut projects = Vec::new();
    let mut known = HashSet::new();
    for (line, fields) in &proj_rows {
        let id = fields.get(id_col).cloned().unwrap_or_default();
        if id.is_empty() {
            return Err(Error::parse(*line, "empty project_id"));
        }
        if !known.insert(id.clone()) {
            return Err(Error::parse(*line, format!("duplicate project '{id}'")));
        }
        let cost_text = fields.get(cost_col).map(String::as_str).unwrap_or("");
        let cost = parse_integral(cost_text, "cost", *line)?;
        if cost == 0 {
            return Err(Error::parse(*line, format!("project '{id}' has nonpositive cost")));
        }
        let name = name_col.and_then(|c| fields.get(c)).filter(|s| !s.is_empty()).cloned();
        projects.push(Project { id, cost, name });
    }

    let vote_sec = &sections["VOTES"];
    let (vote_header, vote_rows) = read_table(vote_sec)?;
    let voter_col = column(&vote_header, "voter_id", vote_sec.header_line)?;
    let vote_col = column(&vote_header, "vote", vote_sec.header_line)?;
    let points_col = vote_header.iter().position(|h| h == "points");
    let mut votes = Vec::new();
    let mut voters = HashSet::new();
    for (line, fields) in &vote_rows {
        let voter_id = fields.get(voter_col).cloned().unwrap_or_default();
        if voter_id.is_empty() {
            return Err(Error::parse(*line, "empty voter_id"));
        }
        if !voters.insert(voter_id.clone()) {
            return Err(Error::parse(*line, format!("duplicate voter '{voter_id}'")));
        }
        let vote_text = fields.get(vote_col).map(String::as_str).unwrap_or("");
        let chosen: Vec<String> = vote_text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if let Some(bad) = chosen.iter().find(|p| !known.contains(*p)) {
            return Err(Error::parse(*line, format!("vote references unknown project '{bad}'")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = chosen.iter().find(|p| !seen.insert(*p)) {
            return Err(Error::parse(*line, format!("project '{dup}' listed twice")));
        }
        let points = match points_col.and_then(|c| fields.get(c)) {
            Some(text) if !text.is_empty() => {
                let pts = text
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite() && *v >= 0.0)
                            .ok_or_else(|| Error::parse(*line, format!("invalid points '{s}'")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if pts.len() != chosen.len() {
                    return Err(Error::parse(*line, "points and vote lists differ in length"));
                }
                Some(pts)
            }
            _ => None,
        };
        votes.push(Vote {
            voter_id,
            projects: chosen,
            points,
        });
    }

    for (key, actual, section) in [
        ("num_projects", projects.len(), proj_sec),
        ("num_votes", votes.len(), vote_sec),
    ] {
        if let Some(text) = lookup(key) {
            let line = meta_lines.get(key).copied().unwrap_or(section.header_line);
            let declared = parse_integral(&text, key, line)?;
            if declared as usize != actual {
                return Err(Error::parse(
                    line,
                    format!("{key} declares {declared} but the file has {actual}"),
                ));
            }
        }
    }

    Ok(PabulibInstance {
        meta,
        budget,
        projects,
        votes,
    })
}

/// Reads and parses a `.pb` file.
pub fn read_pabulib(path: impl AsRef<Path>) -> Result<PabulibInstance> {
    let bytes = std::fs::read(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    parse_pabulib(&text)
}

/// How approvals become utilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    /// An approved project is worth its cost.
    CostUtility,
    /// An approved project is worth one.
    Unit,
    /// Utilities are the `points` scores.
    Points,
}

impl std::str::FromStr for UtilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost_utility" | "cost-utility" => Ok(UtilityMode::CostUtility),
            "unit" => Ok(UtilityMode::Unit),
            "points" => Ok(UtilityMode::Points),
            _ => Err(Error::input(format!("unknown utility mode '{s}'"))),
        }
    }
}

/// An election built from a `.pb` instance.
#[derive(Debug, Clone)]
pub struct Converted {
    pub election: Election,
    pub spec: ConstraintSpec,
    /// Projects without any supporter, left out of the election.
    pub dropped: Vec<String>,
}

/// Builds the election and its budget constraint. Projects nobody supports are dropped.
pub fn to_election(instance: &PabulibInstance, mode: UtilityMode) -> Result<Converted> {
    if mode == UtilityMode::Points && !instance.has_points() {
        return Err(Error::input("points utility mode needs a 'points' column"));
    }
    let cost_of: HashMap<&str, u64> = instance
        .projects
        .iter()
        .map(|p| (p.id.as_str(), p.cost))
        .collect();
    let mut rows: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    let mut supported = HashSet::new();
    for vote in &instance.votes {
        let mut row = Vec::new();
        for (k, p) in vote.projects.iter().enumerate() {
            let u = match mode {
                UtilityMode::CostUtility => cost_of[p.as_str()] as f64,
                UtilityMode::Unit => 1.0,
                UtilityMode::Points => vote.points.as_ref().map_or(0.0, |pts| pts[k]),
            };
            if u > 0.0 {
                supported.insert(p.clone());
                row.push((p.clone(), u));
            }
        }
        rows.push((vote.voter_id.clone(), row));
    }
    let mut b = ElectionBuilder::new();
    for (voter, _) in &rows {
        b.voter(voter.clone());
    }
    let mut dropped = Vec::new();
    for p in &instance.projects {
        if supported.contains(&p.id) {
            b.candidate(p.id.clone(), p.cost);
        } else {
            dropped.push(p.id.clone());
        }
    }
    for (voter, row) in &rows {
        for (p, u) in row {
            b.utility(voter.clone(), p.clone(), *u);
        }
    }
    Ok(Converted {
        election: b.build()?,
        spec: ConstraintSpec::Budget {
            budget: instance.budget,
        },
        dropped,
    })
}

/// Loads an instance from a `.pb` file or from a JSON election document.
///
/// JSON elections carry no budget, so they come with an unconstrained spec.
pub fn load_instance(path: impl AsRef<Path>, mode: UtilityMode) -> Result<Converted> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path)?;
        let raw: crate::election::RawElection = serde_json::from_str(&text)?;
        return Ok(Converted {
            election: Election::from_raw(&raw)?,
            spec: ConstraintSpec::Unconstrained,
            dropped: Vec::new(),
        });
    }
    to_election(&read_pabulib(path)?, mode)
}

/// Serialization format for outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub const OUTCOME_SCHEMA: &str = "propselect.outcome/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OutcomeDoc {
    schema: String,
    rule: String,
    total_cost: u64,
    selected: Vec<SelectedDoc>,
    removed: Vec<RemovedDoc>,
    unspent: Vec<PaymentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SelectedDoc {
    id: String,
    cost: u64,
    time: Option<f64>,
    rho: Option<f64>,
    funded_fraction: f64,
    payments: Vec<PaymentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PaymentDoc {
    voter: String,
    amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RemovedDoc {
    id: String,
    time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    position: usize,
    candidate: String,
    cost: u64,
    time: Option<f64>,
    rho: Option<f64>,
    funded_fraction: f64,
    voter: Option<String>,
    payment: Option<f64>,
}

/// Serializes an outcome with ids resolved against `election`.
pub fn write_outcome(election: &Election, outcome: &Outcome, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let doc = OutcomeDoc {
                schema: OUTCOME_SCHEMA.into(),
                rule: outcome.rule.clone(),
                total_cost: outcome.total_cost(election),
                selected: outcome
                    .purchases
                    .iter()
                    .map(|p| SelectedDoc {
                        id: election.candidate_id(p.candidate).to_string(),
                        cost: election.cost(p.candidate),
                        time: p.time,
                        rho: p.rho,
                        funded_fraction: p.funded_fraction,
                        payments: p
                            .payments
                            .iter()
                            .map(|&(i, amount)| PaymentDoc {
                                voter: election.voter_id(i).to_string(),
                                amount,
                            })
                            .collect(),
                    })
                    .collect(),
                removed: outcome
                    .removed
                    .iter()
                    .map(|r| RemovedDoc {
                        id: election.candidate_id(r.candidate).to_string(),
                        time: r.time,
                    })
                    .collect(),
                unspent: outcome
                    .unspent
                    .iter()
                    .enumerate()
                    .map(|(i, &amount)| PaymentDoc {
                        voter: election.voter_id(i).to_string(),
                        amount,
                    })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            Ok(text)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut wrote = false;
            for (position, p) in outcome.purchases.iter().enumerate() {
                let base = CsvRow {
                    position: position + 1,
                    candidate: election.candidate_id(p.candidate).to_string(),
                    cost: election.cost(p.candidate),
                    time: p.time,
                    rho: p.rho,
                    funded_fraction: p.funded_fraction,
                    voter: None,
                    payment: None,
                };
                if p.payments.is_empty() {
                    w.serialize(&base).map_err(csv_err)?;
                }
                for &(i, amount) in &p.payments {
                    w.serialize(CsvRow {
                        voter: Some(election.voter_id(i).to_string()),
                        payment: Some(amount),
                        ..base.clone()
                    })
                    .map_err(csv_err)?;
                }
                wrote = true;
            }
            if !wrote {
                w.write_record([
                    "position",
                    "candidate",
                    "cost",
                    "time",
                    "rho",
                    "funded_fraction",
                    "voter",
                    "payment",
                ])
                .map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(e.to_string())
}

fn voter(election: &Election, id: &str) -> Result<usize> {
    election
        .voter_index(id)
        .ok_or_else(|| Error::input(format!("unknown voter id '{id}'")))
}

fn candidate(election: &Election, id: &str) -> Result<usize> {
    election
        .candidate_index(id)
        .ok_or_else(|| Error::input(format!("unknown candidate id '{id}'")))
}

/// Reads an outcome written by [`write_outcome`].
pub fn read_outcome(election: &Election, text: &str, format: OutputFormat) -> Result<Outcome> {
    match format {
        OutputFormat::Json => {
            let doc: OutcomeDoc = serde_json::from_str(text)?;
            if doc.schema != OUTCOME_SCHEMA {
                return Err(Error::input(format!("unsupported schema '{}'", doc.schema)));
            }
            let mut purchases = Vec::new();
            let mut has_payments = false;
            for s in &doc.selected {
                let mut payments = Vec::new();
                for p in &s.payments {
                    payments.push((voter(election, &p.voter)?, p.amount));
                }
                has_payments |= !payments.is_empty() || s.rho.is_some();
                purchases.push(Purchase {
                    candidate: candidate(election, &s.id)?,
                    time: s.time,
                    rho: s.rho,
                    funded_fraction: s.funded_fraction,
                    payments,
                });
            }
            let removed = doc
                .removed
                .iter()
                .map(|r| {
                    Ok(Removal {
                        candidate: candidate(election, &r.id)?,
                        time: r.time,
                    })
                })
                .collect::<Result<_>>()?;
            let mut unspent = vec![0.0; election.num_voters()];
            for u in &doc.unspent {
                unspent[voter(election, &u.voter)?] = u.amount;
            }
            Ok(Outcome {
                rule: doc.rule,
                purchases,
                removed,
                unspent,
                has_payments,
                stats: RunStats::default(),
            })
        }
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let mut purchases: Vec<Purchase> = Vec::new();
            let mut order: BTreeMap<usize, usize> = BTreeMap::new();
            for row in reader.deserialize::<CsvRow>() {
                let row = row.map_err(csv_err)?;
                let c = candidate(election, &row.candidate)?;
                let slot = *order.entry(row.position).or_insert_with(|| {
                    purchases.push(Purchase {
                        candidate: c,
                        time: row.time,
                        rho: row.rho,
                        funded_fraction: row.funded_fraction,
                        payments: Vec::new(),
                    });
                    purchases.len() - 1
                });
                if let (Some(v), Some(amount)) = (&row.voter, row.payment) {
                    purchases[slot].payments.push((voter(election, v)?, amount));
                }
            }
            let has_payments = purchases.iter().any(|p| !p.payments.is_empty());
            Ok(Outcome {
                rule: String::new(),
                purchases,
                removed: Vec::new(),
                unspent: vec![0.0; election.num_voters()],
                has_payments,
                stats: RunStats::default(),
            })
        }
    }
}

/// Reads an outcome or a plain list of selected ids (`["p1", "p2"]`).
pub fn read_selection(election: &Election, text: &str) -> Result<Vec<usize>> {
    if let Ok(ids) = serde_json::from_str::<Vec<String>>(text) {
        return election.resolve_candidates(&ids);
    }
    Ok(read_outcome(election, text, OutputFormat::Json)?.selected())
}
