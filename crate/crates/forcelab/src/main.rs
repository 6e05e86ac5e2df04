use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use forcelab::corpus::Notion;
use forcelab::sexp;
use forcelab::suites::{collapse_notes, Budgets, Context, Suite};
use forcelab::{run, tasks, Report};
use forcelab_core::forcing::ForcingRelation;
use forcelab_core::names::{name_universe, UniverseMode};

#[derive(Parser)]
#[command(name = "forcelab", version, about = "Exhaustive small-instance checks of forcing over hereditarily finite sets")]
struct Cli {
    #[command(subcommand)]
    suite: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Truth lemma, forcing-relation laws and the atomic relation.
    Force(Opts),
    /// Star translation of quantifier-free sentences.
    Translate(Opts),
    /// Regular-open completions.
    Complete(Opts),
    /// Truth in V_n read off the collapse, and truth-predicate names.
    Truth(Opts),
    /// Iterated truth predicates over V_3.
    Iterated(Opts),
    /// Random game trees and truth-telling games.
    Game(Opts),
    /// Every suite.
    Oracle(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// Notion file; replaces the built-in corpus.
    #[arg(long)]
    poset: Option<PathBuf>,
    /// Name file; its subname closure replaces the exhaustive universe.
    #[arg(long)]
    names: Option<PathBuf>,
    /// Sentence file; replaces the built-in truth-lemma sentences.
    #[arg(long)]
    formula: Option<PathBuf>,
    /// With --formula: report which sentences this condition (label or index) forces.
    #[arg(long)]
    condition: Option<String>,
    #[arg(long)]
    stage: Vec<usize>,
    /// Collapse parameter as a set, e.g. "(hf (hf))".
    #[arg(long = "A")]
    a: Option<String>,
    /// Formula pool file for the truth and iterated suites; closed under subformulas on load.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    clock: usize,
    #[arg(long, default_value_t = 4)]
    beta: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    max_poset: usize,
    #[arg(long, default_value_t = 1)]
    max_name_rank: usize,
    #[arg(long, default_value_t = 200)]
    translations: usize,
    #[arg(long, default_value_t = 1000)]
    trees: usize,
    #[arg(long)]
    budget_names: Option<usize>,
    #[arg(long)]
    budget_conditions: Option<usize>,
    #[arg(long)]
    budget_nodes: Option<usize>,
    #[arg(long)]
    budget_steps: Option<u64>,
    /// Record wall-clock times per row (reports then differ between runs).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parsed<T>(path: &Path, parse: impl Fn(&str) -> Result<T, sexp::ParseError>) -> Result<T> {
    parse(&read(path)?).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

fn positive(v: Option<usize>, flag: &str) -> Result<Option<usize>> {
    match v {
        Some(0) => bail!("--{flag} must be positive"),
        v => Ok(v),
    }
}

fn context(o: &Opts) -> Result<Context> {
    let mut ctx = Context::new(o.max_poset);
    if let Some(path) = &o.poset {
        ctx.notions = vec![Arc::new(Notion::new("input", parsed(path, sexp::parse_notion)?))];
    }
    if let Some(path) = &o.names {
        ctx.names = Some(parsed(path, sexp::parse_names)?);
    }
    if let Some(path) = &o.formula {
        ctx.sentences = Some(parsed(path, sexp::parse_formulas)?);
    }
    if let Some(path) = &o.pool {
        let pool = parsed(path, sexp::parse_formulas)?;
        ctx.pool = Some(forcelab_core::formula::subformula_closure(&pool));
    }
    if let Some(a) = &o.a {
        ctx.a = Some(sexp::parse_hf(a).map_err(|e| anyhow::anyhow!("--A {e}"))?);
    }
    if !o.stage.is_empty() {
        ctx.stages = o.stage.clone();
    }
    ctx.name_rank = o.max_name_rank;
    ctx.clock = o.clock;
    ctx.beta_max = o.beta;
    ctx.seed = o.seed;
    ctx.translations = o.translations;
    ctx.trees = o.trees;
    let d = Budgets::default();
    ctx.budgets = Budgets {
        names: positive(o.budget_names, "budget-names")?.unwrap_or(d.names),
        conditions: positive(o.budget_conditions, "budget-conditions")?.unwrap_or(d.conditions),
        nodes: positive(o.budget_nodes, "budget-nodes")?.unwrap_or(d.nodes),
        steps: match o.budget_steps {
            Some(0) => bail!("--budget-steps must be positive"),
            s => s.unwrap_or(d.steps),
        },
    };
    Ok(ctx)
}

/// Which of the given sentences the chosen condition forces, per notion.
fn condition_notes(ctx: &Context, label: &str) -> Result<Vec<String>> {
    let Some(sentences) = &ctx.sentences else {
        bail!("--condition needs --formula");
    };
    let mut notes = Vec::new();
    for n in &ctx.notions {
        let p = &n.notion;
        let q = match p.index_of(label).or_else(|| label.parse().ok().filter(|&i| i < p.len())) {
            Some(q) => q,
            None => bail!("no condition `{label}` in {}", n.id),
        };
        let u = match &ctx.names {
            Some(seeds) => name_universe(p, UniverseMode::Seeded(seeds), ctx.budgets.names)?,
            None => name_universe(p, UniverseMode::Exhaustive(ctx.name_rank), ctx.budgets.names)?,
        };
        let mut rel = ForcingRelation::with_universe(p, u)?;
        for phi in sentences {
            let verdict = if rel.forces_at(q, phi)? { "forces" } else { "does not force" };
            notes.push(format!("{}: {} {verdict} {}", n.id, p.label(q), sexp::print_formula(phi)));
        }
    }
    Ok(notes)
}

fn config(suite: Suite, o: &Opts, ctx: &Context) -> serde_json::Value {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    serde_json::json!({
        "suite": suite,
        "poset": path(&o.poset),
        "names": path(&o.names),
        "formula": path(&o.formula),
        "condition": o.condition,
        "pool": path(&o.pool),
        "stages": ctx.stages,
        "A": o.a,
        "clock": ctx.clock,
        "beta": ctx.beta_max,
        "max_poset": o.max_poset,
        "max_name_rank": ctx.name_rank,
        "translations": ctx.translations,
        "trees": ctx.trees,
        "seed": ctx.seed,
        "budgets": ctx.budgets,
        "notions": ctx.notions.iter().map(|n| &n.id).collect::<Vec<_>>(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, o) = match cli.suite {
        Command::Force(o) => (Suite::Force, o),
        Command::Translate(o) => (Suite::Translate, o),
        Command::Complete(o) => (Suite::Complete, o),
        Command::Truth(o) => (Suite::Truth, o),
        Command::Iterated(o) => (Suite::Iterated, o),
        Command::Game(o) => (Suite::Game, o),
        Command::Oracle(o) => (Suite::Oracle, o),
    };
    match execute(suite, &o) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("forcelab: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(suite: Suite, o: &Opts) -> Result<bool> {
    let ctx = context(o)?;
    let mut notes = vec!["formula pools are finite: every claim is checked over the declared pool only".to_string()];
    if matches!(suite, Suite::Truth | Suite::Oracle) {
        notes.extend(collapse_notes(&ctx));
    }
    if let Some(label) = &o.condition {
        notes.extend(condition_notes(&ctx, label)?);
    }
    let rows = run(&tasks(suite, &ctx), o.timings);
    let report = Report::new(format!("{suite:?}").to_lowercase(), config(suite, o, &ctx), notes, rows);
    let json = report.to_json();
    match &o.out {
        Some(path) => std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{json}"),
    }
    Ok(report.ok())
}
