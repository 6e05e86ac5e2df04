//! Built-in notions, name universes and formula pools.

use std::collections::BTreeSet;

use forcelab_core::formula::{subformula_closure, Formula, Term, Var};
use forcelab_core::hfset::{v_stage, HFSet};
use forcelab_core::names::{cond_check, PName};
use forcelab_core::poset::ForcingNotion;
use itertools::Itertools;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Notion {
    pub id: String,
    pub notion: ForcingNotion,
    pub separative: bool,
}

impl Notion {
    pub fn new(id: impl Into<String>, notion: ForcingNotion) -> Notion {
        let separative = notion.is_separative();
        Notion {
            id: id.into(),
            notion,
            separative,
        }
    }
}

/// `1 > a, b > c`. Not separative: `a ≰ b`, yet everything below `a` meets `b`.
pub fn diamond() -> ForcingNotion {
    ForcingNotion::from_generators(
        ["1", "a", "b", "c"].map(String::from).to_vec(),
        &[(1, 0), (2, 0), (3, 1), (3, 2)],
    )
    .unwrap()
}

fn canonical(n: usize, rel: &[(usize, usize)]) -> Vec<(usize, usize)> {
    (1..n)
        .permutations(n - 1)
        .map(|perm| {
            let at = |a: usize| if a == 0 { 0 } else { perm[a - 1] };
            let mut r: Vec<(usize, usize)> = rel.iter().map(|&(a, b)| (at(a), at(b))).collect();
            r.sort_unstable();
            r
        })
        .min()
        .unwrap_or_default()
}

/// Preorders on `n` points with `0` on top, as strict `(lower, upper)` pairs,
/// one per isomorphism class.
fn preorders_with_top(n: usize) -> Vec<Vec<(usize, usize)>> {
    let slots: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && b != 0)
        .collect();
    let mut seen = BTreeSet::new();
    for mask in 0u32..1 << slots.len() {
        let mut rel: Vec<(usize, usize)> = slots
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        rel.extend((1..n).map(|a| (a, 0)));
        let has = |a: usize, b: usize| a == b || rel.contains(&(a, b));
        if rel.iter().all(|&(a, b)| (0..n).all(|c| !has(b, c) || has(a, c))) {
            seen.insert(canonical(n, &rel));
        }
    }
    seen.into_iter().collect()
}

/// Every separative preorder with a top and at most `max` conditions, up to
/// isomorphism. Equivalent conditions are allowed.
pub fn separative_notions(max: usize) -> Vec<Notion> {
    let mut out = Vec::new();
    for n in 1..=max {
        for (j, le) in preorders_with_top(n).into_iter().enumerate() {
            let labels = std::iter::once("1".to_string()).chain((1..n).map(|i| format!("p{i}"))).collect();
            let p = ForcingNotion::from_generators(labels, &le).unwrap();
            if p.is_separative() {
                out.push(Notion::new(format!("sep{n}-{j}"), p));
            }
        }
    }
    out
}

/// The fixed corpus: the fork, the diamond, a three-element chain and every
/// separative notion with at most `max_poset` conditions.
pub fn notions(max_poset: usize) -> Vec<Notion> {
    let fork = ForcingNotion::fork();
    let mut out = vec![
        Notion::new("fork", fork.clone()),
        Notion::new("diamond", diamond()),
        Notion::new("chain3", ForcingNotion::chain(3)),
    ];
    let same_as_fork = |p: &ForcingNotion| p.len() == 3 && p.le_pairs() == fork.le_pairs();
    out.extend(separative_notions(max_poset).into_iter().filter(|n| !same_as_fork(&n.notion)));
    out
}

fn x() -> Term {
    Term::var("x")
}

fn y() -> Term {
    Term::var("y")
}

fn all(vs: &[&str], f: Formula) -> Formula {
    Formula::forall(vs.iter().map(|&v| Var::from(v)).collect(), f)
}

fn some(vs: &[&str], f: Formula) -> Formula {
    Formula::exists(vs.iter().map(|&v| Var::from(v)).collect(), f)
}

/// Closed sentences over a rank-1 universe of `p`: atoms among a few
/// constants, `Ġ`-membership of every check name, and quantified sentences
/// whose constants stay inside the universe.
pub fn lemma_sentences(p: &ForcingNotion) -> Vec<Formula> {
    let last = p.len() - 1;
    let e = Term::Name(PName::empty());
    let one = Term::Name(cond_check(1));
    let a = Term::Name(PName::new([(PName::empty(), last)]));
    let b = Term::Name(PName::new((0..p.len()).map(|q| (PName::empty(), q)).collect::<Vec<_>>()));
    let consts = [e.clone(), one.clone(), a.clone()];
    let mut out = Vec::new();
    for s in &consts {
        for t in &consts {
            out.push(Formula::eq(s.clone(), t.clone()));
            out.push(Formula::mem(s.clone(), t.clone()));
        }
    }
    for q in 0..p.len() {
        out.push(Formula::in_g(Term::Name(cond_check(q))));
    }
    let g = |q: usize| Formula::in_g(Term::Name(cond_check(q)));
    out.extend([
        Formula::not(Formula::mem(e.clone(), a.clone())),
        Formula::not(Formula::eq(e.clone(), b.clone())),
        Formula::not(g(last)),
        Formula::and(vec![g(0), g(last)]),
        Formula::and(vec![Formula::mem(e.clone(), b.clone()), Formula::not(g(last))]),
        Formula::or(vec![g(last), Formula::not(Formula::mem(e.clone(), a.clone()))]),
        Formula::and(vec![]),
        Formula::or(vec![]),
        all(&["x"], Formula::eq(x(), x())),
        all(&["x"], Formula::not(Formula::mem(x(), x()))),
        some(&["x"], Formula::mem(x(), a.clone())),
        some(&["x"], Formula::in_g(x())),
        all(&["x"], some(&["y"], Formula::mem(x(), y()))),
        some(&["x"], all(&["y"], Formula::not(Formula::mem(y(), x())))),
        all(&["x"], Formula::implies(Formula::mem(x(), a.clone()), Formula::eq(x(), e.clone()))),
        all(&["x", "y"], Formula::implies(Formula::eq(x(), y()), Formula::eq(y(), x()))),
        all(&["x", "y"], Formula::implies(Formula::mem(x(), y()), Formula::not(Formula::mem(y(), x())))),
        some(&["x"], Formula::and(vec![Formula::in_g(x()), Formula::not(Formula::eq(x(), e.clone()))])),
        all(&["x"], Formula::implies(Formula::in_g(x()), Formula::eq(x(), e.clone()))),
        some(&["x", "y"], Formula::and(vec![Formula::not(Formula::eq(x(), y())), Formula::mem(x(), b.clone()), Formula::mem(y(), b.clone())])),
        all(&["x"], Formula::implies(Formula::mem(x(), b.clone()), Formula::eq(x(), e.clone()))),
        some(&["x"], Formula::and(vec![Formula::eq(x(), a.clone()), Formula::mem(e.clone(), x())])),
        Formula::not(some(&["x"], Formula::and(vec![Formula::mem(e.clone(), x()), Formula::not(Formula::eq(x(), one.clone()))]))),
        all(&["x"], Formula::or(vec![Formula::eq(x(), e.clone()), Formula::mem(e.clone(), x()), Formula::not(Formula::in_g(x()))])),
        some(&["x"], Formula::and(vec![Formula::eq(x(), b.clone()), all(&["y"], Formula::implies(Formula::mem(y(), x()), Formula::in_g(y())))])),
        all(&["x", "y"], Formula::implies(Formula::and(vec![Formula::mem(x(), y()), Formula::mem(y(), a.clone())]), Formula::eq(x(), x()))),
    ]);
    out
}

/// A random quantifier-free sentence over `names` and the check names of
/// the conditions, with conjunctions and disjunctions of any width up to 4.
pub fn random_qf_sentence<R: Rng>(rng: &mut R, p: &ForcingNotion, names: &[PName], depth: usize) -> Formula {
    let name = |rng: &mut R| Term::Name(names[rng.gen_range(0..names.len())].clone());
    let atom = |rng: &mut R| match rng.gen_range(0..3) {
        0 => Formula::eq(name(rng), name(rng)),
        1 => Formula::mem(name(rng), name(rng)),
        _ => Formula::in_g(Term::Name(cond_check(rng.gen_range(0..p.len())))),
    };
    if depth == 0 {
        return atom(rng);
    }
    match rng.gen_range(0..5) {
        0 => atom(rng),
        1 => Formula::not(random_qf_sentence(rng, p, names, depth - 1)),
        2 | 3 => {
            let k = rng.gen_range(0..=4);
            let parts = (0..k).map(|_| random_qf_sentence(rng, p, names, depth - 1)).collect();
            if rng.gen_bool(0.5) {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        _ => Formula::in_g(name(rng)),
    }
}

/// A pool with free variables for truth names.
pub fn truth_name_pool() -> Vec<Formula> {
    let roots = vec![
        Formula::mem(x(), y()),
        Formula::not(Formula::eq(x(), y())),
        some(&["y"], Formula::mem(y(), x())),
        all(&["x"], some(&["y"], Formula::mem(x(), y()))),
        Formula::and(vec![Formula::in_g(x()), Formula::not(Formula::mem(y(), x()))]),
        all(&["y"], Formula::implies(Formula::mem(y(), x()), Formula::in_g(y()))),
    ];
    subformula_closure(&roots)
}

fn hf(x: HFSet) -> Term {
    Term::Ground(x)
}

/// A subformula-closed pool over `(∈, A)` for the stage `V_2`.
pub fn stage_pool() -> Vec<Formula> {
    let zero = hf(HFSet::empty());
    let roots = vec![
        all(&["x"], some(&["y"], Formula::mem(x(), y()))),
        some(&["y"], Formula::and(vec![Formula::mem(y(), x()), Formula::in_class(y(), "A")])),
        Formula::not(Formula::eq(x(), y())),
        Formula::in_class(x(), "A"),
        Formula::mem(zero.clone(), x()),
        all(&["y"], Formula::implies(Formula::in_class(y(), "A"), Formula::mem(y(), x()))),
        some(&["x"], Formula::and(vec![Formula::in_class(x(), "A"), Formula::not(Formula::eq(x(), zero.clone()))])),
        all(&["x", "y"], Formula::implies(Formula::mem(x(), y()), Formula::not(Formula::mem(y(), x())))),
        Formula::or(vec![Formula::mem(x(), y()), Formula::eq(x(), y()), Formula::mem(y(), x())]),
        Formula::iff(Formula::in_class(x(), "A"), Formula::mem(zero, x())),
    ];
    subformula_closure(&roots)
}

/// A pool over `(∈, A, T̂r)` for iterated truth over `V_3`.
pub fn iterated_pool() -> Vec<Formula> {
    use forcelab_core::coding::{encode_formula, encode_valuation, Valuation};
    let russell = all(&["x"], Formula::not(Formula::mem(x(), x())));
    let in_a = Formula::in_class(x(), "A");
    let has_a = some(&["x"], in_a.clone());
    let t1 = Formula::tr(hf(HFSet::nat(1)), hf(encode_formula(&russell)), hf(HFSet::empty()));
    let t2 = Formula::tr(hf(HFSet::nat(2)), hf(encode_formula(&t1)), hf(HFSet::empty()));
    let t3 = Formula::tr(hf(HFSet::nat(3)), hf(encode_formula(&has_a)), hf(HFSet::empty()));
    let mut v = Valuation::new();
    v.insert(Var::from("x"), HFSet::empty());
    let t0 = Formula::tr(hf(HFSet::nat(0)), hf(encode_formula(&in_a)), hf(encode_valuation(&v)));
    let stage_var = some(&["a"], Formula::tr(Term::var("a"), hf(encode_formula(&has_a)), hf(HFSet::empty())));
    let open = Formula::tr(x(), hf(encode_formula(&russell)), hf(HFSet::empty()));
    let junk = Formula::tr(hf(HFSet::nat(1)), hf(HFSet::nat(1)), hf(HFSet::empty()));
    let roots = vec![
        russell,
        has_a,
        Formula::not(in_a.clone()),
        Formula::and(vec![in_a, Formula::mem(hf(HFSet::empty()), x())]),
        t0,
        t1,
        t2,
        Formula::not(t3),
        stage_var,
        open,
        junk,
    ];
    subformula_closure(&roots)
}

/// Atomic formulas over `(∈)` and their negations, for truth-telling games.
pub fn game_pool() -> Vec<Formula> {
    let atoms = [
        Formula::mem(x(), y()),
        Formula::eq(x(), y()),
        Formula::mem(hf(HFSet::empty()), x()),
    ];
    let mut out: Vec<Formula> = atoms.to_vec();
    out.extend(atoms.into_iter().map(Formula::not));
    subformula_closure(&out)
}

/// Every subset of `V_n`.
pub fn subsets_of_stage(n: usize) -> forcelab_core::Result<Vec<HFSet>> {
    let vn = v_stage(n)?;
    Ok((0..1u64 << vn.len())
        .map(|mask| HFSet::make(vn.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x.clone())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use forcelab_core::formula::is_subformula_closed;

    #[test]
    fn corpus_shape() {
        // Separative quotients on at most 5 points are the trivial notion, the
        // fork, the 3-antichain, the 4-antichain and the binary tree under one
        // of two atoms; blowing up classes gives 1, 2, 4, 8, 17 notions.
        let counts: Vec<usize> = (1..=5).map(|m| separative_notions(m).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 8, 17]);
        let c = notions(5);
        assert!(c.iter().filter(|n| n.separative).count() >= 10);
        assert!(!c.iter().find(|n| n.id == "diamond").unwrap().separative);
        assert!(c.iter().all(|n| n.notion.len() <= 5));
    }

    #[test]
    fn pools() {
        let p = ForcingNotion::fork();
        let s = lemma_sentences(&p);
        assert!(s.len() >= 40);
        assert!(s.iter().all(|f| f.is_closed()));
        assert!(stage_pool().len() >= 25);
        assert!(is_subformula_closed(&iterated_pool()));
        assert_eq!(game_pool().len(), 6);
        assert_eq!(subsets_of_stage(2).unwrap().len(), 4);
    }
}
