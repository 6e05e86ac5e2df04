//! Verification suites. Each suite is a list of independent tasks, one per
//! report row.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use forcelab_core::etr::{constant_instance, cumulative_formula, cumulative_instance, etr_solve, verify_solution, RecursionInstance, Step, PARAM_CLASS, STEP_VAR_STAGE, STEP_VAR_X};
use forcelab_core::forcing::{
    atomic_by_definition, audit, check_atomic_values, check_forces_star, check_lambda_onto, check_truth_in_extension, star_equation,
    truth_lemma_check, truth_name, Atomic, ForcingRelation, RegularOpenAlgebra,
};
use forcelab_core::formula::{Formula, Kind, Term, Var};
use forcelab_core::games::{check_labels, random_tree, strategy, truth_telling_game, verify_strategy, zermelo, zermelo_direct};
use forcelab_core::hfset::{v_stage, HFSet};
use forcelab_core::names::{name_universe, PName, UniverseMode};
use forcelab_core::poset::{build_collapse, CollapseOptions};
use forcelab_core::truth::{
    check_iterated, derived_iterated_truth, forcing_truth, iterated_truth, iterated_truth_etr, tarski_instance, tarski_truth,
    tarski_truth_direct, HfModel, TruthTable,
};
use forcelab_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{self, Notion};
use crate::report::{Row, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Force,
    Translate,
    Complete,
    Truth,
    Iterated,
    Game,
    Oracle,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Budgets {
    pub names: usize,
    pub conditions: usize,
    pub nodes: usize,
    pub steps: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            names: forcelab_core::names::DEFAULT_NAME_BUDGET,
            conditions: CollapseOptions::default().max_conditions,
            nodes: forcelab_core::games::DEFAULT_GAME_BUDGET,
            steps: forcelab_core::etr::DEFAULT_STEP_BUDGET,
        }
    }
}

/// Everything a suite needs; built from the command line or by tests.
#[derive(Debug, Clone)]
pub struct Context {
    pub notions: Vec<Arc<Notion>>,
    pub name_rank: usize,
    /// Seeds for the quantifier universe, replacing the exhaustive one.
    pub names: Option<Vec<PName>>,
    /// Sentences replacing the built-in truth-lemma pool.
    pub sentences: Option<Vec<Formula>>,
    pub stages: Vec<usize>,
    /// Parameter for the collapse; every subset of the stage when absent.
    pub a: Option<HFSet>,
    /// Replaces the built-in pool of the truth or iterated suite.
    pub pool: Option<Vec<Formula>>,
    pub clock: usize,
    pub beta_max: usize,
    pub translations: usize,
    pub trees: usize,
    pub tree_nodes: usize,
    pub seed: u64,
    pub budgets: Budgets,
}

impl Context {
    pub fn new(max_poset: usize) -> Context {
        Context {
            notions: corpus::notions(max_poset).into_iter().map(Arc::new).collect(),
            name_rank: 1,
            names: None,
            sentences: None,
            stages: vec![2, 3],
            a: None,
            pool: None,
            clock: 3,
            beta_max: 4,
            translations: 200,
            trees: 1000,
            tree_nodes: 200,
            seed: 0,
            budgets: Budgets::default(),
        }
    }

    fn universe(&self, n: &Notion) -> Result<Vec<PName>> {
        match &self.names {
            Some(seeds) => name_universe(&n.notion, UniverseMode::Seeded(seeds), self.budgets.names),
            None => name_universe(&n.notion, UniverseMode::Exhaustive(self.name_rank), self.budgets.names),
        }
    }

    fn sentences(&self, n: &Notion) -> Vec<Formula> {
        self.sentences.clone().unwrap_or_else(|| corpus::lemma_sentences(&n.notion))
    }
}

/// What a task found: how many instances it checked and the first failure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub checked: u64,
    pub counterexample: Option<String>,
}

impl Outcome {
    fn pass(checked: impl TryInto<u64>) -> Outcome {
        Outcome {
            checked: checked.try_into().unwrap_or(u64::MAX),
            counterexample: None,
        }
    }

    fn fail(checked: impl TryInto<u64>, why: impl Into<String>) -> Outcome {
        Outcome {
            checked: checked.try_into().unwrap_or(u64::MAX),
            counterexample: Some(why.into()),
        }
    }
}

type Job = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

pub struct Task {
    pub claim: String,
    pub anchor: &'static str,
    /// The acceptance criterion this row counts towards, if any.
    pub criterion: Option<u8>,
    job: Job,
}

impl Task {
    fn new(claim: impl Into<String>, anchor: &'static str, criterion: Option<u8>, job: impl Fn() -> Result<Outcome> + Send + Sync + 'static) -> Task {
        Task {
            claim: claim.into(),
            anchor,
            criterion,
            job: Box::new(job),
        }
    }
}

pub const TRUTH_LEMMA: &str = "truth lemma";
pub const STAR: &str = "star translation";
pub const COMPLETION: &str = "boolean completion";
pub const FORCING_TRUTH: &str = "forcing-derived truth";
pub const TRUTH_NAME: &str = "truth-predicate name";
pub const ITERATED: &str = "iterated truth";
pub const ETR: &str = "transfinite recursion";
pub const GAMES: &str = "clopen determinacy";
pub const LAWS: &str = "forcing-relation laws";

/// Runs tasks in parallel; rows come back in task order.
pub fn run(tasks: &[Task], timings: bool) -> Vec<Row> {
    tasks
        .par_iter()
        .map(|t| {
            let start = Instant::now();
            let result = (t.job)();
            let runtime_ms = timings.then(|| start.elapsed().as_millis() as u64);
            let (status, checked, counterexample) = match result {
                Ok(o) if o.counterexample.is_none() => (Status::Pass, o.checked, None),
                Ok(o) => (Status::Fail, o.checked, o.counterexample),
                Err(e @ Error::Budget { .. }) => (Status::SkippedBudget, 0, Some(e.to_string())),
                Err(e) => (Status::Fail, 0, Some(format!("error: {e}"))),
            };
            Row {
                claim: t.claim.clone(),
                anchor: t.anchor,
                criterion: t.criterion,
                status,
                checked,
                counterexample,
                runtime_ms,
            }
        })
        .collect()
}

pub fn tasks(suite: Suite, ctx: &Context) -> Vec<Task> {
    match suite {
        Suite::Force => force(ctx),
        Suite::Translate => translate(ctx),
        Suite::Complete => complete(ctx),
        Suite::Truth => [forcing_derived_truth(ctx), truth_names(ctx)].into_iter().flatten().collect(),
        Suite::Iterated => iterated(ctx),
        Suite::Game => games(ctx),
        Suite::Oracle => [
            force(ctx),
            translate(ctx),
            complete(ctx),
            forcing_derived_truth(ctx),
            truth_names(ctx),
            iterated(ctx),
            etr_builtins(ctx),
            games(ctx),
        ]
        .into_iter()
        .flatten()
        .collect(),
    }
}

/// Truth lemma, audit, and the atomic relation against its definition and
/// against the recursion engine.
pub fn force(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    for n in &ctx.notions {
        let (c, n2) = (ctx.clone(), n.clone());
        out.push(Task::new(format!("truth-lemma/{}", n.id), TRUTH_LEMMA, Some(1), move || {
            let p = &n2.notion;
            let mut rel = ForcingRelation::with_universe(p, c.universe(&n2)?)?;
            let filters = p.generic_filters();
            if let Err(e) = p.verify_generic_filters(&filters, 256, c.seed) {
                return Ok(Outcome::fail(0, format!("generic filter enumeration: {e}")));
            }
            let sentences = c.sentences(&n2);
            let checked = filters.len() * sentences.len();
            Ok(match truth_lemma_check(&mut rel, &filters, &sentences)? {
                None => Outcome::pass(checked),
                Some((k, phi)) => Outcome::fail(checked, format!("filter {:?} and {phi:?}", filters[k].members().collect::<Vec<_>>())),
            })
        }));
        let (c, n2) = (ctx.clone(), n.clone());
        out.push(Task::new(format!("audit/{}", n.id), LAWS, Some(9), move || {
            let mut rel = ForcingRelation::with_universe(&n2.notion, c.universe(&n2)?)?;
            let reports = audit(&mut rel, &c.sentences(&n2))?;
            let checked: usize = reports.iter().map(|r| r.checked).sum();
            Ok(match reports.iter().find(|r| !r.passed()) {
                None => Outcome::pass(checked),
                Some(r) => Outcome::fail(checked, format!("{}: {}", r.law, r.failure.as_deref().unwrap_or(""))),
            })
        }));
        let (c, n2) = (ctx.clone(), n.clone());
        out.push(Task::new(format!("atomic-etr/{}", n.id), ETR, Some(7), move || {
            let p = &n2.notion;
            let u = c.universe(&n2)?;
            let mut rel = ForcingRelation::with_universe(p, u.clone())?;
            if !rel.atomic_matches_etr()? {
                return Ok(Outcome::fail(0, "recursion and memoized atomic relations differ"));
            }
            let mut checked = 0u64;
            for s in &u {
                for t in &u {
                    for kind in [Atomic::In, Atomic::Eq] {
                        let table = rel.atomic(kind, s, t);
                        for q in 0..p.len() {
                            checked += 1;
                            if table.contains(q) != atomic_by_definition(p, kind, s, t, q) {
                                return Ok(Outcome::fail(checked, format!("{kind:?} {s:?} {t:?} at {}", p.label(q))));
                            }
                        }
                    }
                }
            }
            Ok(Outcome::pass(checked))
        }));
    }
    out
}

/// Star translation against the composite clauses, plus the abbreviation
/// invariant for `∨`.
pub fn translate(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    for (k, n) in ctx.notions.iter().enumerate() {
        let (c, n2) = (ctx.clone(), n.clone());
        out.push(Task::new(format!("star/{}", n.id), STAR, Some(2), move || {
            let p = &n2.notion;
            let names = name_universe(p, UniverseMode::Exhaustive(1), c.budgets.names)?;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut rel = ForcingRelation::new(p);
            for i in 0..c.translations {
                let phi = corpus::random_qf_sentence(&mut rng, p, &names, 3);
                let direct = rel.forces(&phi)?;
                let eq = star_equation(p, &phi)?;
                let star = rel.forces(&eq)?;
                if direct != star {
                    return Ok(Outcome::fail(i, format!("{phi:?}: {:?} vs {:?}", direct.ones().collect::<Vec<_>>(), star.ones().collect::<Vec<_>>())));
                }
                if let Kind::Or(parts) = phi.kind() {
                    let dual = Formula::not(Formula::and(parts.iter().cloned().map(Formula::not).collect()));
                    if rel.forces(&dual)? != direct {
                        return Ok(Outcome::fail(i, format!("{phi:?} differs from its dual")));
                    }
                }
            }
            Ok(Outcome::pass(c.translations))
        }));
    }
    out
}

/// The regular-open completion of each separative notion.
pub fn complete(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    for n in ctx.notions.iter().filter(|n| n.separative) {
        let (c, n2) = (ctx.clone(), n.clone());
        out.push(Task::new(format!("completion/{}", n.id), COMPLETION, Some(3), move || {
            let p = &n2.notion;
            let alg = RegularOpenAlgebra::new(p)?;
            if let Err(e) = alg.check_boolean() {
                return Ok(Outcome::fail(0, e));
            }
            if let Err(e) = alg.check_dense_embedding() {
                return Ok(Outcome::fail(0, e));
            }
            let mut rel = ForcingRelation::new(p);
            Ok(match check_atomic_values(&mut rel, &alg, &c.universe(&n2)?) {
                Ok(k) => Outcome::pass(k + alg.len()),
                Err(e) => Outcome::fail(0, e),
            })
        }));
        let n2 = n.clone();
        out.push(Task::new(format!("lambda-onto/{}", n.id), COMPLETION, None, move || {
            let alg = RegularOpenAlgebra::new(&n2.notion)?;
            let mut rel = ForcingRelation::new(&n2.notion);
            Ok(match check_lambda_onto(&mut rel, &alg)? {
                Ok(()) => Outcome::pass(alg.len()),
                Err(e) => Outcome::fail(0, e),
            })
        }));
    }
    out
}

/// Truth in `(V_n, ∈, A)` read off the collapse, against Tarski.
pub fn forcing_derived_truth(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    let pool = Arc::new(ctx.pool.clone().unwrap_or_else(corpus::stage_pool));
    for &n in &ctx.stages {
        let sets = match &ctx.a {
            Some(a) => vec![a.clone()],
            None => match corpus::subsets_of_stage(n) {
                Ok(s) => s,
                Err(e) => {
                    let msg = e.to_string();
                    out.push(Task::new(format!("forcing-truth/V{n}"), FORCING_TRUTH, Some(4), move || Err(Error::Invalid(msg.clone()))));
                    continue;
                }
            },
        };
        for a in sets {
            let (c, pool) = (ctx.clone(), pool.clone());
            let claim = format!("forcing-truth/V{n}/A={a:?}");
            out.push(Task::new(claim, FORCING_TRUTH, Some(4), move || {
                let opts = CollapseOptions {
                    max_conditions: c.budgets.conditions,
                    ..CollapseOptions::default()
                };
                let ft = forcing_truth(n, &a, &pool, &opts)?;
                let model = HfModel::new(v_stage(n)?).with_class(PARAM_CLASS, a.children().iter().cloned());
                let tarski = tarski_truth(&model, &pool)?;
                let checked = ft.table.len() * ft.conditions;
                if let Some(&e) = ft.table.differences(&tarski).first() {
                    let (i, tuple) = tarski.locate(e);
                    return Ok(Outcome::fail(checked, format!("{:?} at {:?}", pool[i], tarski.valuation(i, &tuple))));
                }
                Ok(match &ft.invariance_failure {
                    None => Outcome::pass(checked),
                    Some((p, phi, v)) => Outcome::fail(checked, format!("condition {p} decides {phi:?} at {v:?} unlike 1")),
                })
            }));
        }
    }
    out
}

/// Whether the finite collapse notions are separative; reported, not checked.
pub fn collapse_notes(ctx: &Context) -> Vec<String> {
    let mut notes = Vec::new();
    for &n in &ctx.stages {
        let a = ctx.a.clone().unwrap_or_else(HFSet::empty);
        let opts = CollapseOptions {
            max_conditions: ctx.budgets.conditions,
            ..CollapseOptions::default()
        };
        match build_collapse(n, &a, &opts) {
            Ok(p) => notes.push(match p.separativity_counterexample() {
                None => format!("F_A over V{n} with A={a:?}: {} conditions, separative", p.len()),
                Some((x, y)) => format!(
                    "F_A over V{n} with A={a:?}: {} conditions, not separative ({} vs {})",
                    p.len(),
                    p.label(x),
                    p.label(y)
                ),
            }),
            Err(e) => notes.push(format!("F_A over V{n}: {e}")),
        }
    }
    notes
}

/// `Ṫ` against `⊩` and against truth in each extension.
pub fn truth_names(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    for n in &ctx.notions {
        let n2 = n.clone();
        let budget = ctx.budgets.names;
        out.push(Task::new(format!("truth-name/{}", n.id), TRUTH_NAME, Some(5), move || {
            let p = &n2.notion;
            let seeds: Vec<PName> = (0..p.len()).map(|q| PName::new([(PName::empty(), q)])).collect();
            let u = name_universe(p, UniverseMode::Seeded(&seeds), budget)?;
            let mut rel = ForcingRelation::with_universe(p, u)?;
            let pool = corpus::truth_name_pool();
            let t = truth_name(&mut rel, &pool)?;
            let mut checked = match check_forces_star(&mut rel, &t, &pool)? {
                Ok(k) => k,
                Err(e) => return Ok(Outcome::fail(0, e)),
            };
            for g in p.generic_filters() {
                match check_truth_in_extension(&rel, &t, &pool, &g)? {
                    Ok(k) => checked += k,
                    Err(e) => return Ok(Outcome::fail(checked, format!("filter {:?}: {e}", g.members().collect::<Vec<_>>()))),
                }
            }
            Ok(Outcome::pass(checked))
        }));
    }
    out
}

/// Iterated truth over `(V_3, ∈, A)`: the defining clauses, the recursion
/// engine and the derived predicate.
pub fn iterated(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    let pool = Arc::new(ctx.pool.clone().unwrap_or_else(corpus::iterated_pool));
    let sets: Vec<HFSet> = match &ctx.a {
        Some(a) => vec![a.clone()],
        None => corpus::subsets_of_stage(2).unwrap_or_default(),
    };
    for a in sets {
        let beta = ctx.beta_max;
        let members: Arc<Vec<HFSet>> = Arc::new(a.children().to_vec());
        let (pool2, m2) = (pool.clone(), members.clone());
        out.push(Task::new(format!("iterated/A={a:?}"), ITERATED, Some(6), move || {
            let vn = v_stage(3)?;
            let it = iterated_truth(&vn, &m2, &pool2, beta)?;
            let entries = it.stages.iter().map(TruthTable::len).sum::<usize>();
            if let Some((b, phi, v)) = check_iterated(&vn, &m2, &it)? {
                return Ok(Outcome::fail(entries, format!("stage {b}: {phi:?} at {v:?}")));
            }
            let derived = derived_iterated_truth(&vn, &m2, &pool2, beta)?;
            Ok(if it.bit_identical(&derived) {
                Outcome::pass(2 * entries)
            } else {
                Outcome::fail(entries, "derived predicate differs")
            })
        }));
        let (pool2, m2) = (pool.clone(), members);
        out.push(Task::new(format!("iterated-etr/A={a:?}"), ETR, Some(7), move || {
            let vn = v_stage(3)?;
            let it = iterated_truth(&vn, &m2, &pool2, beta)?;
            let etr = iterated_truth_etr(&vn, &m2, &pool2, beta)?;
            let entries = it.stages.iter().map(TruthTable::len).sum::<usize>();
            Ok(if it.bit_identical(&etr) {
                Outcome::pass(entries)
            } else {
                Outcome::fail(entries, "recursion and stage-by-stage tables differ")
            })
        }));
    }
    out
}

fn solve_and_verify(inst: &RecursionInstance<'_>) -> Result<Outcome> {
    let sol = etr_solve(inst)?;
    let checked = inst.length * inst.domain.len();
    Ok(match verify_solution(inst, &sol)? {
        None => Outcome::pass(checked),
        Some((stage, x)) => Outcome::fail(checked, format!("slice {stage} at {:?}", inst.domain[x])),
    })
}

/// The built-in recursion instances.
pub fn etr_builtins(ctx: &Context) -> Vec<Task> {
    let steps = ctx.budgets.steps;
    let budgeted = move |mut inst: RecursionInstance<'_>| {
        inst.budget = steps;
        solve_and_verify(&inst)
    };
    vec![
        Task::new("etr/constant", ETR, Some(7), move || {
            let vn = v_stage(3)?;
            let a: BTreeSet<HFSet> = vn.iter().step_by(2).cloned().collect();
            budgeted(constant_instance(vn, 4, a))
        }),
        Task::new("etr/cumulative", ETR, Some(7), move || budgeted(cumulative_instance(v_stage(4)?, 5))),
        Task::new("etr/cumulative-formula", ETR, Some(7), move || {
            let inst = RecursionInstance::new(4, v_stage(3)?, Step::Formula(cumulative_formula()));
            let by_formula = etr_solve(&inst)?;
            let by_callable = etr_solve(&cumulative_instance(v_stage(3)?, 4))?;
            if by_formula.slices != by_callable.slices {
                return Ok(Outcome::fail(0, "formula and callable steps disagree"));
            }
            budgeted(inst)
        }),
        Task::new("etr/formula-param", ETR, Some(7), move || {
            // x ∈ S_α iff x ∈ A or some element of stage is below x.
            let x = Term::var(STEP_VAR_X);
            let step = Formula::or(vec![
                Formula::in_class(x.clone(), PARAM_CLASS),
                Formula::exists(
                    vec![Var::from("b")],
                    Formula::and(vec![Formula::mem(Term::var("b"), Term::var(STEP_VAR_STAGE)), Formula::mem(Term::var("b"), x)]),
                ),
            ]);
            let vn = v_stage(3)?;
            let a: BTreeSet<HFSet> = [vn[1].clone()].into_iter().collect();
            budgeted(RecursionInstance::new(3, vn, Step::Formula(step)).with_param(a))
        }),
        Task::new("etr/tarski", ETR, Some(7), move || {
            let model = HfModel::new(v_stage(2)?).with_class(PARAM_CLASS, [HFSet::empty()]);
            let pool = corpus::stage_pool();
            let shape = TruthTable::new(model.domain_sets().to_vec(), pool.clone())?;
            let mut inst = tarski_instance(&model, &shape);
            inst.budget = steps;
            let out = solve_and_verify(&inst)?;
            if out.counterexample.is_none() && !tarski_truth(&model, &pool)?.bit_identical(&tarski_truth_direct(&model, &pool)?) {
                return Ok(Outcome::fail(out.checked, "recursion and direct evaluation differ"));
            }
            Ok(out)
        }),
    ]
}

/// Random game trees and truth-telling games over `(V_2, ∈)`.
pub fn games(ctx: &Context) -> Vec<Task> {
    let mut out = Vec::new();
    const CHUNK: usize = 100;
    for start in (0..ctx.trees).step_by(CHUNK) {
        let end = (start + CHUNK).min(ctx.trees);
        let (seed, max) = (ctx.seed, ctx.tree_nodes);
        out.push(Task::new(format!("zermelo/trees-{start}-{}", end - 1), GAMES, Some(8), move || {
            let mut checked = 0u64;
            for i in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let t = random_tree(&mut rng, max);
                let labels = zermelo(&t)?;
                if labels != zermelo_direct(&t) {
                    return Ok(Outcome::fail(checked, format!("tree {i}: recursion and backward induction differ")));
                }
                if let Some(v) = check_labels(&t, &labels) {
                    return Ok(Outcome::fail(checked, format!("tree {i}: label at node {v} is not a fixpoint")));
                }
                let w = labels[t.root];
                if let Err(line) = verify_strategy(&t, w, &strategy(&t, &labels, w)) {
                    return Ok(Outcome::fail(checked, format!("tree {i}: winner's strategy loses along {line:?}")));
                }
                checked += t.len() as u64;
            }
            Ok(Outcome::pass(checked))
        }));
    }
    for clock in 0..=ctx.clock {
        let nodes = ctx.budgets.nodes;
        out.push(Task::new(format!("truth-telling/V2/clock-{clock}"), GAMES, Some(8), move || {
            let model = HfModel::new(v_stage(2)?);
            let g = truth_telling_game(&model, &corpus::game_pool(), clock, nodes)?;
            Ok(match g.check()? {
                Ok(k) => Outcome::pass(g.tree.len() + k),
                Err(e) => Outcome::fail(g.tree.len(), e),
            })
        }));
    }
    out
}
