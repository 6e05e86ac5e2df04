//! A class name `Ṫ` for truth of a formula pool in the extension, and the
//! relation `⊩*` it induces.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::coding::{encode_formula, encode_list};
use crate::error::{Error, Result};
use crate::formula::{is_subformula_closed, Formula, Term, Var};
use crate::hfset::HFSet;
use crate::names::{check_name, eval_class, op_name, ClassName, Evaluator as NameEvaluator, PName};
use crate::poset::Filter;
use crate::truth::{tarski_truth, HfModel};

use super::relation::ForcingRelation;

pub const TRUTH_CLASS: &str = "T";

/// `op(σ_1, op(σ_2, … op(σ_k, ∅)))`, evaluating to the coded list of values.
pub fn tuple_name(names: &[PName]) -> PName {
    names.iter().rev().fold(PName::empty(), |tail, s| op_name(s, &tail))
}

/// `op(⌜φ⌝̌, tuple(σ̄))`
pub fn truth_key(phi: &Formula, args: &[PName]) -> PName {
    op_name(&check_name(&encode_formula(phi)), &tuple_name(args))
}

fn instances(names: &[PName], k: usize) -> Vec<Vec<PName>> {
    let mut out: Vec<Vec<PName>> = alloc::vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                names.iter().map(move |s| {
                    let mut t = t.clone();
                    t.push(s.clone());
                    t
                })
            })
            .collect();
    }
    out
}

fn instantiate(phi: &Formula, args: &[PName]) -> Formula {
    let b: BTreeMap<Var, Term> = phi
        .free_vars()
        .iter()
        .cloned()
        .zip(args.iter().map(|s| Term::Name(s.clone())))
        .collect();
    phi.instantiate(&b)
}

/// `Ṫ = {⟨op(⌜φ⌝̌, tuple(σ̄)), p⟩ : p ⊩ φ(σ̄)}` over the relation's universe.
pub fn truth_name(rel: &mut ForcingRelation<'_>, pool: &[Formula]) -> Result<ClassName> {
    if !is_subformula_closed(pool) {
        return Err(Error::PoolNotClosed);
    }
    let names = rel.universe().to_vec();
    let mut entries = Vec::new();
    for phi in pool {
        for args in instances(&names, phi.free_vars().len()) {
            let s = rel.forces(&instantiate(phi, &args))?;
            if s.is_clear() {
                continue;
            }
            let key = truth_key(phi, &args);
            entries.extend(s.ones().map(|p| (key.clone(), p)));
        }
    }
    Ok(ClassName::new(TRUTH_CLASS, entries))
}

/// `p ⊩* φ(σ̄) ⟺ p ⊩ op(⌜φ⌝̌, tuple(σ̄)) ∈ Ṫ` agrees with `⊩` on every
/// instance. Registers `Ṫ` with the relation. Returns the number of
/// instances checked or the first disagreement.
pub fn check_forces_star(rel: &mut ForcingRelation<'_>, truth: &ClassName, pool: &[Formula]) -> Result<core::result::Result<usize, String>> {
    rel.add_class(truth.clone());
    let names = rel.universe().to_vec();
    let mut checked = 0;
    for phi in pool {
        for args in instances(&names, phi.free_vars().len()) {
            let direct = rel.forces(&instantiate(phi, &args))?;
            let key = truth_key(phi, &args);
            let star = rel.forces(&Formula::in_class(Term::Name(key), TRUTH_CLASS))?;
            if direct != star {
                return Ok(Err(format!(
                    "{phi:?} at {args:?}: forced by {:?}, starred by {:?}",
                    direct.ones().collect::<Vec<_>>(),
                    star.ones().collect::<Vec<_>>()
                )));
            }
            checked += 1;
        }
    }
    Ok(Ok(checked))
}

/// In `M[G]`, the evaluated `Ṫ` is exactly Tarskian truth of the pool over
/// the values of the universe: `⟨⌜φ⌝, ā⟩ ∈ Ṫ_G ⟺ M[G] ⊨ φ[ā]`.
pub fn check_truth_in_extension(
    rel: &ForcingRelation<'_>,
    truth: &ClassName,
    pool: &[Formula],
    g: &Filter,
) -> Result<core::result::Result<usize, String>> {
    let mut ev = NameEvaluator::new(g);
    let domain: BTreeSet<HFSet> = rel.universe().iter().map(|s| ev.eval(s)).collect();
    let model = HfModel::new(domain.into_iter().collect()).with_generic(g.members().map(HFSet::nat));
    let table = tarski_truth(&model, pool)?;
    let t_g = eval_class(truth, g);
    let mut expected = BTreeSet::new();
    for e in 0..table.len() {
        let (i, tuple) = table.locate(e);
        let vals: Vec<HFSet> = tuple.iter().map(|&t| table.domain()[t].clone()).collect();
        let key = HFSet::kpair(encode_formula(&pool[i]), encode_list(vals));
        if table.get_entry(e) {
            if !t_g.contains(&key) {
                return Ok(Err(format!("{:?} at {tuple:?} is true but missing", pool[i])));
            }
            expected.insert(key);
        } else if t_g.contains(&key) {
            return Ok(Err(format!("{:?} at {tuple:?} is false but present", pool[i])));
        }
    }
    if t_g != expected {
        return Ok(Err("the evaluated truth name has stray elements".into()));
    }
    Ok(Ok(table.len()))
}
