//! One line per acceptance criterion: the oracle rows counting towards it,
//! the minimum sizes it asks for, and its time limit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use forcelab::corpus;
use forcelab::suites::{self, Context, Suite};
use forcelab::{Row, Status};
use forcelab_core::formula::subformula_closure;
use forcelab_core::games::random_tree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: u8,
    title: &'static str,
    limit: Duration,
    /// Size requirements on the inputs, checked before the rows.
    shape: fn(&Context) -> Result<(), String>,
}

fn lemma_corpus(ctx: &Context) -> Result<(), String> {
    let sep: Vec<_> = ctx.notions.iter().filter(|n| n.separative).collect();
    if sep.len() < 10 {
        return Err(format!("only {} separative notions", sep.len()));
    }
    for id in ["fork", "diamond"] {
        if !ctx.notions.iter().any(|n| n.id == id) {
            return Err(format!("corpus lacks the {id}"));
        }
    }
    if let Some(n) = ctx.notions.iter().find(|n| n.notion.len() > 5) {
        return Err(format!("{} has {} conditions", n.id, n.notion.len()));
    }
    if ctx.name_rank < 1 {
        return Err("name universes below rank 1".into());
    }
    for n in &ctx.notions {
        let s = corpus::lemma_sentences(&n.notion);
        if s.len() < 40 || s.iter().any(|phi| !phi.is_closed()) {
            return Err(format!("{}: {} sentences, need 40 closed ones", n.id, s.len()));
        }
    }
    Ok(())
}

fn star_shape(ctx: &Context) -> Result<(), String> {
    if ctx.translations < 200 {
        return Err(format!("{} translations per notion", ctx.translations));
    }
    Ok(())
}

fn no_shape(_: &Context) -> Result<(), String> {
    Ok(())
}

fn stage_shape(ctx: &Context) -> Result<(), String> {
    let pool = corpus::stage_pool();
    if pool.len() < 25 {
        return Err(format!("pool of {}", pool.len()));
    }
    if subformula_closure(&pool).len() != pool.len() {
        return Err("pool is not subformula-closed".into());
    }
    if !ctx.stages.contains(&2) || ctx.a.is_some() {
        return Err("every A at stage 2 is required".into());
    }
    Ok(())
}

fn iterated_shape(ctx: &Context) -> Result<(), String> {
    if ctx.beta_max < 4 {
        return Err(format!("beta only up to {}", ctx.beta_max));
    }
    Ok(())
}

fn game_shape(ctx: &Context) -> Result<(), String> {
    if ctx.trees < 1000 || ctx.clock < 3 {
        return Err(format!("{} trees, clock {}", ctx.trees, ctx.clock));
    }
    for i in 0..ctx.trees {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(i as u64));
        let t = random_tree(&mut rng, ctx.tree_nodes);
        if t.len() > 200 {
            return Err(format!("tree {i} has {} nodes", t.len()));
        }
    }
    Ok(())
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, title: "truth lemma over the corpus", limit: Duration::from_secs(60), shape: lemma_corpus },
    Criterion { id: 2, title: "star translation soundness", limit: Duration::from_secs(120), shape: star_shape },
    Criterion { id: 3, title: "boolean completion coherence", limit: Duration::from_secs(30), shape: no_shape },
    Criterion { id: 4, title: "forcing-derived truth", limit: Duration::from_secs(600), shape: stage_shape },
    Criterion { id: 5, title: "truth-predicate name", limit: Duration::from_secs(60), shape: no_shape },
    Criterion { id: 6, title: "iterated truth", limit: Duration::from_secs(60), shape: iterated_shape },
    Criterion { id: 7, title: "recursion engine", limit: Duration::from_secs(30), shape: no_shape },
    Criterion { id: 8, title: "clopen determinacy", limit: Duration::from_secs(120), shape: game_shape },
    Criterion { id: 9, title: "forcing-relation laws", limit: Duration::from_secs(60), shape: no_shape },
];

fn verdict(c: &Criterion, ctx: &Context, rows: &[Row], took: Duration) -> Result<String, String> {
    (c.shape)(ctx)?;
    if rows.is_empty() {
        return Err("no rows".into());
    }
    if let Some(r) = rows.iter().find(|r| r.status != Status::Pass) {
        let why = r.counterexample.clone().unwrap_or_default();
        return Err(format!("{} is {:?}: {why}", r.claim, r.status));
    }
    if took > c.limit {
        return Err(format!("took {:.1} s", took.as_secs_f64()));
    }
    let checked: u64 = rows.iter().map(|r| r.checked).sum();
    Ok(format!("{} rows, {checked} checks", rows.len()))
}

fn main() -> ExitCode {
    let ctx = Context::new(5);
    let mut rest = suites::tasks(Suite::Oracle, &ctx);
    let mut failed = 0;
    for c in &CRITERIA {
        let group;
        (group, rest) = rest.into_iter().partition(|t| t.criterion == Some(c.id));
        let start = Instant::now();
        let rows = suites::run(&group, false);
        let took = start.elapsed();
        let time = format!("{:.2} s of {} s", took.as_secs_f64(), c.limit.as_secs());
        match verdict(c, &ctx, &rows, took) {
            Ok(detail) => println!("PASS criterion {}: {} ({detail}; {time})", c.id, c.title),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {} ({why}; {time})", c.id, c.title);
            }
        }
    }
    println!("{} of {} criteria pass", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
