use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use propselect::axioms::{
    check_ejr, check_ejr_plus_up_to_one, check_pjr_degree, check_ranking, AxiomReport,
    CheckOptions, RankingCheck,
};
use propselect::constraint::{Constraint, ConstraintSpec};
use propselect::election::Election;
use propselect::metrics::{benchmark, load_corpus, BenchConfig, BenchReport};
use propselect::outcome::Ranking;
use propselect::pabulib::{load_instance, read_selection, write_outcome, OutputFormat, UtilityMode};
use propselect::proprank::{run_proprank_ranking, ProprankConfig};
use propselect::{run_rule, Error, Rule, RuleConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_CONTRACT: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;
const EXIT_TOO_LARGE: u8 = 4;

#[derive(Parser)]
#[command(name = "propselect", version, about = "Proportional selection rules and axiom checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule and print the outcome.
    Run(RunArgs),
    /// Check an outcome against a proportionality axiom.
    Verify(VerifyArgs),
    /// Evaluate rules on every instance of a corpus directory.
    Bench(BenchArgs),
    /// Print the full PropRank ranking with purchase times.
    Rank(RankArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// A PabuLib `.pb` file or a JSON election.
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::CostUtility)]
    utility_mode: Mode,
    /// JSON constraint side file; defaults to the instance budget.
    #[arg(long)]
    constraint: Option<PathBuf>,
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 2)]
    sigma: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    rule: String,
    #[command(flatten)]
    params: RuleArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    axiom: Axiom,
    /// Outcome JSON written by `run`, or a JSON list of candidate ids.
    #[arg(long, conflicts_with = "rule")]
    outcome: Option<PathBuf>,
    /// Rule to run when no outcome file is given.
    #[arg(long)]
    rule: Option<String>,
    #[command(flatten)]
    params: RuleArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(env = "PROPSELECT_CORPUS")]
    corpus: PathBuf,
    /// Comma-separated rule names, or `all`.
    #[arg(long, default_value = "all")]
    rules: String,
    #[command(flatten)]
    params: RuleArgs,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record wall-clock runtimes.
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value_t = Mode::CostUtility)]
    utility_mode: Mode,
    /// Write the per-instance CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Check EJR on every prefix under its own cost as budget.
    #[arg(long)]
    verify_prefixes: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "cost_utility", alias = "cost-utility")]
    CostUtility,
    Unit,
    Points,
}

impl From<Mode> for UtilityMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::CostUtility => UtilityMode::CostUtility,
            Mode::Unit => UtilityMode::Unit,
            Mode::Points => UtilityMode::Points,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Axiom {
    Ejr,
    WeakEjr,
    PjrDegree,
    Ejrplus,
    RankingEjr,
}

struct Loaded {
    election: Election,
    spec: ConstraintSpec,
    constraint: Constraint,
}

fn load(args: &InstanceArgs) -> anyhow::Result<Loaded> {
    let conv = load_instance(&args.instance, args.utility_mode.into())
        .with_context(|| format!("reading {}", args.instance.display()))?;
    for id in &conv.dropped {
        eprintln!("note: project '{id}' has no supporters and was left out");
    }
    let spec = match &args.constraint {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ConstraintSpec::from_json(&text)?
        }
        None => conv.spec,
    };
    let constraint = spec.compile(&conv.election)?;
    Ok(Loaded {
        election: conv.election,
        spec,
        constraint,
    })
}

fn rule_config(params: &RuleArgs) -> anyhow::Result<RuleConfig> {
    if !(0.0..=1.0).contains(&params.kappa) {
        bail!(Error::Input(format!("--kappa must lie in [0, 1], got {}", params.kappa)));
    }
    Ok(RuleConfig {
        kappa: params.kappa,
        sigma: params.sigma,
        ..RuleConfig::default()
    })
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_report(report: &AxiomReport) -> anyhow::Result<u8> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(if report.passed() { 0 } else { EXIT_VIOLATIONS })
}

fn cmd_run(args: RunArgs) -> anyhow::Result<u8> {
    let config = rule_config(&args.params)?;
    let rule: Rule = args.rule.parse()?;
    let loaded = load(&args.instance)?;
    let outcome = run_rule(rule, &loaded.election, &loaded.constraint, &config)?;
    let text = write_outcome(&loaded.election, &outcome, args.format.into())?;
    emit(&text, args.out.as_deref())?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<u8> {
    let config = rule_config(&args.params)?;
    let loaded = load(&args.instance)?;
    let e = &loaded.election;
    let selection = match (&args.outcome, &args.rule) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_selection(e, &text)?
        }
        (None, Some(rule)) => {
            let rule: Rule = rule.parse()?;
            run_rule(rule, e, &loaded.constraint, &config)?.selected()
        }
        (None, None) => match args.axiom {
            Axiom::RankingEjr => Vec::new(),
            _ => bail!(Error::Input("give --outcome or --rule".into())),
        },
    };
    let report = match args.axiom {
        Axiom::Ejr => check_ejr(e, &loaded.constraint, &selection, &CheckOptions::default())?,
        Axiom::WeakEjr => check_ejr(e, &loaded.constraint, &selection, &CheckOptions::weak())?,
        Axiom::PjrDegree => check_pjr_degree(
            e,
            &loaded.constraint,
            &selection,
            config.kappa,
            &CheckOptions::default(),
        )?,
        Axiom::Ejrplus => {
            let Some(budget) = loaded.constraint.budget() else {
                bail!(Error::Contract(format!(
                    "EJR+ up-to-one needs a budget constraint, got {}",
                    loaded.spec.to_json()
                )));
            };
            check_ejr_plus_up_to_one(e, budget, &selection)
        }
        Axiom::RankingEjr => {
            let ranking = if args.outcome.is_some() || args.rule.is_some() {
                Ranking {
                    order: selection,
                    timestamps: Vec::new(),
                }
            } else {
                run_proprank_ranking(
                    e,
                    &ProprankConfig {
                        kappa: config.kappa,
                        ..ProprankConfig::default()
                    },
                )?
            };
            check_ranking(e, &ranking, RankingCheck::Ejr, &CheckOptions::default())?
        }
    };
    print_report(&report)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<u8> {
    let rule_config = rule_config(&args.params)?;
    let rules = if args.rules == "all" {
        Rule::ALL.to_vec()
    } else {
        args.rules
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<propselect::Result<Vec<Rule>>>()?
    };
    let (instances, load_failures) = load_corpus(&args.corpus, args.utility_mode.into())
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let mut report: BenchReport = benchmark(
        &instances,
        &BenchConfig {
            rules,
            rule_config,
            timing: args.timing,
            jobs: args.jobs,
        },
    )?;
    report.failures.splice(0..0, load_failures);
    for f in &report.failures {
        eprintln!("failed: {} [{}]: {}", f.instance_id, f.rule, f.message);
    }
    emit(&report.to_csv()?, args.out.as_deref())?;
    eprint!("{}", report.summary_table());
    Ok(0)
}

#[derive(Serialize)]
struct RankEntry<'a> {
    position: usize,
    candidate: &'a str,
    time: f64,
}

fn cmd_rank(args: RankArgs) -> anyhow::Result<u8> {
    if !(0.0..=1.0).contains(&args.kappa) {
        bail!(Error::Input(format!("--kappa must lie in [0, 1], got {}", args.kappa)));
    }
    let loaded = load(&args.instance)?;
    let e = &loaded.election;
    let ranking = run_proprank_ranking(
        e,
        &ProprankConfig {
            kappa: args.kappa,
            ..ProprankConfig::default()
        },
    )?;
    let entries: Vec<RankEntry> = ranking
        .order
        .iter()
        .zip(&ranking.timestamps)
        .enumerate()
        .map(|(k, (&c, &time))| RankEntry {
            position: k + 1,
            candidate: e.candidate_id(c),
            time,
        })
        .collect();
    let report = if args.verify_prefixes {
        Some(check_ranking(e, &ranking, RankingCheck::Ejr, &CheckOptions::default())?)
    } else {
        None
    };
    match args.format {
        Some(Format::Json) => {
            let doc = serde_json::json!({ "ranking": entries, "prefix_check": report });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for entry in &entries {
                w.serialize(entry)?;
            }
            w.flush()?;
        }
        None => {
            for entry in &entries {
                println!("{}\t{}\t{}", entry.position, entry.candidate, entry.time);
            }
            if let Some(r) = &report {
                println!("{}", serde_json::to_string_pretty(r)?);
            }
        }
    }
    Ok(match &report {
        Some(r) if !r.passed() => EXIT_VIOLATIONS,
        _ => 0,
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Contract(_)) | Some(Error::UndefinedNormalization(_)) => EXIT_CONTRACT,
        Some(Error::TooLarge(_)) => EXIT_TOO_LARGE,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Rank(a) => cmd_rank(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
