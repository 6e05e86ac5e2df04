//! Iterated truth predicates over `(V_n, ∈, A)` and their derivation from a
//! `T̂r`-free translation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use fixedbitset::FixedBitSet;
use hashbrown::HashMap;

use crate::coding::{decode_formula, decode_valuation, encode_var, Coder, Valuation};
use crate::error::{Error, Result};
use crate::etr::{etr_solve, flatten, RecursionInstance};
use crate::formula::{is_subformula_closed, Formula, Kind, Term, Var};
use crate::hfset::{transitive_closure, HFSet, Theta};

use super::model::{Evaluator, HfModel, TrOracle};
use super::table::{check_clauses, tarski_truth, TruthTable};

pub type StageLookup<'a> = dyn Fn(usize, usize, &[usize]) -> Result<bool> + 'a;

#[derive(Clone, Copy)]
enum Decoded {
    NotACode,
    Escape,
    At(usize),
}

/// Interprets `T̂r(α, ⌜φ⌝, v)` at stage `β` by reading stage `α < β`.
///
/// Arguments that do not decode make the atom false; a formula code outside
/// the pool is an error, and so is a valuation with values outside the domain.
pub struct StageOracle<'a> {
    shape: &'a TruthTable,
    beta: usize,
    lookup: &'a StageLookup<'a>,
    decoded: RefCell<HashMap<HFSet, Decoded>>,
}

impl fmt::Debug for StageOracle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StageOracle").field("beta", &self.beta).finish()
    }
}

impl<'a> StageOracle<'a> {
    pub fn new(shape: &'a TruthTable, beta: usize, lookup: &'a StageLookup<'a>) -> Self {
        StageOracle {
            shape,
            beta,
            lookup,
            decoded: RefCell::new(HashMap::new()),
        }
    }

    fn formula(&self, y: &HFSet) -> Decoded {
        if let Some(&d) = self.decoded.borrow().get(y) {
            return d;
        }
        let d = match decode_formula(y) {
            None => Decoded::NotACode,
            Some(f) => match self.shape.position(&f) {
                Some(i) => Decoded::At(i),
                None => Decoded::Escape,
            },
        };
        self.decoded.borrow_mut().insert(y.clone(), d);
        d
    }
}

impl TrOracle for StageOracle<'_> {
    fn holds(&self, x: &HFSet, y: &HFSet, z: &HFSet) -> Result<bool> {
        let i = match self.formula(y) {
            Decoded::NotACode => return Ok(false),
            Decoded::Escape => return Err(Error::PoolEscape),
            Decoded::At(i) => i,
        };
        let Some(alpha) = x.as_nat() else {
            return Ok(false);
        };
        let Some(v) = decode_valuation(z) else {
            return Ok(false);
        };
        let fv = self.shape.pool()[i].free_vars();
        if v.len() != fv.len() || !fv.iter().all(|k| v.contains_key(k)) {
            return Ok(false);
        }
        let mut tuple = Vec::with_capacity(fv.len());
        for k in fv {
            let a = &v[k];
            match self.shape.domain_index(a) {
                Some(t) => tuple.push(t),
                None => return Err(Error::Encoding(format!("valuation value {a:?} lies outside the domain"))),
            }
        }
        if alpha >= self.beta {
            return Ok(false);
        }
        (self.lookup)(alpha, i, &tuple)
    }
}

/// Stages `0..=β_max` of the iterated truth predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IteratedTruth {
    pub stages: Vec<TruthTable>,
}

impl IteratedTruth {
    pub fn bit_identical(&self, other: &IteratedTruth) -> bool {
        self.stages.len() == other.stages.len()
            && self.stages.iter().zip(&other.stages).all(|(a, b)| a.bit_identical(b))
    }

    pub fn holds(&self, beta: usize, phi: &Formula, v: &Valuation) -> Option<bool> {
        self.stages.get(beta)?.get_valuation(phi, v)
    }
}

fn base_model<'o>(vn: &[HFSet], a: &[HFSet]) -> HfModel<'o> {
    HfModel::new(vn.to_vec()).with_class("A", a.iter().cloned())
}

/// Stage by stage, each stage a Tarskian recursion whose `T̂r` atoms read
/// the stages already built.
pub fn iterated_truth(vn: &[HFSet], a: &[HFSet], pool: &[Formula], beta_max: usize) -> Result<IteratedTruth> {
    if !is_subformula_closed(pool) {
        return Err(Error::PoolNotClosed);
    }
    let shape = TruthTable::new(vn.to_vec(), pool.to_vec())?;
    let mut stages: Vec<TruthTable> = Vec::with_capacity(beta_max + 1);
    for beta in 0..=beta_max {
        let table = {
            let done = &stages;
            let lookup = |alpha: usize, i: usize, t: &[usize]| Ok(done[alpha].get(i, t));
            let oracle = StageOracle::new(&shape, beta, &lookup);
            let model = base_model(vn, a).with_tr(&oracle);
            tarski_truth(&model, pool)?
        };
        stages.push(table);
    }
    Ok(IteratedTruth { stages })
}

/// The whole hierarchy as one recursion of length `(β_max + 1)·span`, where
/// `span` exceeds every formula rank; slice `β·span + r` holds the true
/// entries of rank `r` at stage `β`.
pub fn iterated_truth_etr(vn: &[HFSet], a: &[HFSet], pool: &[Formula], beta_max: usize) -> Result<IteratedTruth> {
    if !is_subformula_closed(pool) {
        return Err(Error::PoolNotClosed);
    }
    let shape = TruthTable::new(vn.to_vec(), pool.to_vec())?;
    let span = pool.iter().map(|f| f.rank() + 1).max().unwrap_or(1);
    let length = (beta_max + 1) * span;
    let domain: Vec<HFSet> = (0..shape.len()).map(|e| HFSet::ack(e as u64)).collect();
    let sh = &shape;
    let inst = RecursionInstance::callable(length, domain, move |e, _, view| {
        let (beta, r) = crate::etr::unflatten(view.stage(), span);
        let (i, tuple) = sh.locate(e);
        if sh.pool()[i].rank() != r {
            return Ok(false);
        }
        let lookup = |alpha: usize, j: usize, t: &[usize]| view.contains(flatten(alpha, sh.pool()[j].rank(), span), sh.entry(j, t));
        let oracle = StageOracle::new(sh, beta, &lookup);
        let model = base_model(vn, a).with_tr(&oracle);
        let mut ev = Evaluator::new(&model);
        sh.clause(i, &tuple, &mut |phi, env| ev.eval_in(phi, env), &mut |j, t| {
            view.contains(flatten(beta, sh.pool()[j].rank(), span), sh.entry(j, t))
        })
    });
    let sol = etr_solve(&inst)?;
    let mut stages = Vec::with_capacity(beta_max + 1);
    for beta in 0..=beta_max {
        let mut bits = FixedBitSet::with_capacity(shape.len());
        for r in 0..span {
            bits.union_with(&sol.slices[flatten(beta, r, span)]);
        }
        let mut t = shape.clone();
        for e in bits.ones() {
            t.set_entry(e, true);
        }
        stages.push(t);
    }
    Ok(IteratedTruth { stages })
}

/// Checks every stage against the clauses: atoms by the structure, truth
/// atoms by the earlier stages, connectives and quantifiers by their parts.
/// Returns the first failure as `(β, formula, valuation)`.
pub fn check_iterated(vn: &[HFSet], a: &[HFSet], it: &IteratedTruth) -> Result<Option<(usize, Formula, Valuation)>> {
    for (beta, table) in it.stages.iter().enumerate() {
        let lookup = |alpha: usize, i: usize, t: &[usize]| Ok(it.stages[alpha].get(i, t));
        let oracle = StageOracle::new(table, beta, &lookup);
        let model = base_model(vn, a).with_tr(&oracle);
        if let Some((phi, v)) = check_clauses(&model, table)? {
            return Ok(Some((beta, phi, v)));
        }
    }
    Ok(None)
}

/// Translation `φ ↦ φ*_β` into a `T̂r`-free formula over an extended
/// transitive domain, relativizing the original quantifiers to `V_n` by
/// `⋁_{a∈V_n} θ_a(x)`.
#[derive(Debug)]
pub struct IteratedTranslator {
    pool: Vec<Formula>,
    vn: Vec<HFSet>,
    codes: Vec<HFSet>,
    theta: Theta,
    memo: HashMap<(Formula, usize), Formula>,
    in_v: HashMap<Var, Formula>,
}

impl IteratedTranslator {
    pub fn new(vn: &[HFSet], pool: &[Formula]) -> Result<Self> {
        if !is_subformula_closed(pool) {
            return Err(Error::PoolNotClosed);
        }
        let mut coder = Coder::default();
        let codes = pool.iter().map(|f| coder.encode(f)).collect();
        Ok(IteratedTranslator {
            pool: pool.to_vec(),
            vn: vn.to_vec(),
            codes,
            theta: Theta::default(),
            memo: HashMap::new(),
            in_v: HashMap::new(),
        })
    }

    /// The transitive domain the translations are evaluated over: `V_n`,
    /// every constant and code they mention, the stage ordinals and the
    /// valuation pairs.
    pub fn domain(&self, beta_max: usize) -> Vec<HFSet> {
        let mut roots: Vec<HFSet> = self.vn.clone();
        roots.extend(self.codes.iter().cloned());
        roots.extend((0..=beta_max).map(HFSet::nat));
        for f in &self.pool {
            f.visit_terms(&mut |t| collect_grounds(t, &mut roots));
            for v in f.free_vars() {
                let c = encode_var(v);
                roots.extend(self.vn.iter().map(|a| HFSet::kpair(c.clone(), a.clone())));
            }
        }
        transitive_closure(&roots)
    }

    fn in_v(&mut self, v: &Var) -> Formula {
        if let Some(f) = self.in_v.get(v) {
            return f.clone();
        }
        let vn = self.vn.clone();
        let f = Formula::or(vn.iter().map(|a| self.theta.on(a, Term::Var(v.clone()))).collect());
        self.in_v.insert(v.clone(), f.clone());
        f
    }

    fn fresh(xi: usize, i: usize) -> Var {
        Var::from(format!("%v{xi}_{i}").as_str())
    }

    pub fn translate(&mut self, phi: &Formula, beta: usize) -> Result<Formula> {
        let key = (phi.clone(), beta);
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let out = match phi.kind() {
            Kind::Eq(..) | Kind::In(..) | Kind::InClass(..) => phi.clone(),
            Kind::InG(_) => return Err(Error::Unsupported("the generic-filter predicate in truth formulas")),
            Kind::Tr(tx, ty, tz) => self.truth_atom(tx, ty, tz, beta)?,
            Kind::Not(g) => Formula::not(self.translate(g, beta)?),
            Kind::And(gs) => Formula::and(gs.iter().map(|g| self.translate(g, beta)).collect::<Result<_>>()?),
            Kind::Or(gs) => Formula::or(gs.iter().map(|g| self.translate(g, beta)).collect::<Result<_>>()?),
            Kind::Forall(vs, g) => {
                let guard = Formula::and(vs.iter().map(|v| self.in_v(v)).collect());
                Formula::forall(vs.clone(), Formula::implies(guard, self.translate(g, beta)?))
            }
            Kind::Exists(vs, g) => {
                let mut parts: Vec<Formula> = vs.iter().map(|v| self.in_v(v)).collect();
                parts.push(self.translate(g, beta)?);
                Formula::exists(vs.clone(), Formula::and(parts))
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// `⋁_{ξ<β, ψ} [θ_ξ(x) ∧ θ_ψ(y) ∧ ∃ā (ā ∈ V_n ∧ z = {⟨⌜a_i⌝, a_i⟩} ∧ ψ*_ξ(ā))]`
    fn truth_atom(&mut self, tx: &Term, ty: &Term, tz: &Term, beta: usize) -> Result<Formula> {
        let mut disj = Vec::new();
        for xi in 0..beta {
            let stage = self.theta.on(&HFSet::nat(xi), tx.clone());
            for k in 0..self.pool.len() {
                let psi = self.pool[k].clone();
                let code = self.codes[k].clone();
                let fv: Vec<Var> = psi.free_vars().to_vec();
                let fresh: Vec<Var> = (0..fv.len()).map(|i| Self::fresh(xi, i)).collect();
                let binding: BTreeMap<Var, Term> =
                    fv.iter().cloned().zip(fresh.iter().map(|v| Term::Var(v.clone()))).collect();
                let body = self.translate(&psi, xi)?.instantiate(&binding);
                let w = Var::from(format!("%w{xi}").as_str());
                let pairs = Formula::or(
                    fv.iter()
                        .zip(&fresh)
                        .map(|(v, a)| {
                            Formula::eq(
                                Term::Var(w.clone()),
                                Term::pair(Term::Ground(encode_var(v)), Term::Var(a.clone())),
                            )
                        })
                        .collect(),
                );
                let valuation = Formula::forall(
                    alloc::vec![w.clone()],
                    Formula::iff(Formula::mem(Term::Var(w.clone()), tz.clone()), pairs),
                );
                let mut inner: Vec<Formula> = fresh.iter().map(|a| self.in_v(a)).collect();
                inner.push(valuation);
                inner.push(body);
                let witness = if fresh.is_empty() {
                    Formula::and(inner)
                } else {
                    Formula::exists(fresh, Formula::and(inner))
                };
                let name = self.theta.on(&code, ty.clone());
                disj.push(Formula::and(alloc::vec![stage.clone(), name, witness]));
            }
        }
        Ok(Formula::or(disj))
    }
}

fn collect_grounds(t: &Term, out: &mut Vec<HFSet>) {
    match t {
        Term::Ground(x) => out.push(x.clone()),
        Term::Pair(a, b) => {
            collect_grounds(a, out);
            collect_grounds(b, out);
        }
        _ => {}
    }
}

/// The predicate defined by the translations: entry `(β, φ, v)` holds iff
/// `φ*_β` holds at `v` in the extended domain.
pub fn derived_iterated_truth(vn: &[HFSet], a: &[HFSet], pool: &[Formula], beta_max: usize) -> Result<IteratedTruth> {
    let mut tr = IteratedTranslator::new(vn, pool)?;
    let domain = tr.domain(beta_max);
    let model = HfModel::new(domain).with_class("A", a.iter().cloned());
    let mut ev = Evaluator::new(&model);
    let shape = TruthTable::new(vn.to_vec(), pool.to_vec())?;
    let mut stages = Vec::with_capacity(beta_max + 1);
    for beta in 0..=beta_max {
        let mut t = shape.clone();
        for e in 0..t.len() {
            let (i, tuple) = t.locate(e);
            let star = tr.translate(&pool[i], beta)?;
            if ev.eval_in(&star, &t.env(i, &tuple))? {
                t.set_entry(e, true);
            }
        }
        stages.push(t);
    }
    Ok(IteratedTruth { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{encode_formula, encode_valuation};
    use crate::formula::subformula_closure;
    use crate::hfset::v_stage;
    use alloc::vec;

    fn g(x: HFSet) -> Term {
        Term::Ground(x)
    }

    fn pool() -> Vec<Formula> {
        let x = Term::var("x");
        let russell = Formula::forall(vec![Var::from("x")], Formula::not(Formula::mem(x.clone(), x.clone())));
        let in_a = Formula::in_class(x.clone(), "A");
        let t1 = Formula::tr(g(HFSet::nat(1)), g(encode_formula(&russell)), g(HFSet::empty()));
        let t2 = Formula::tr(g(HFSet::nat(2)), g(encode_formula(&t1)), g(HFSet::empty()));
        let mut v = Valuation::new();
        v.insert(Var::from("x"), HFSet::empty());
        let t3 = Formula::tr(g(HFSet::nat(0)), g(encode_formula(&in_a)), g(encode_valuation(&v)));
        let some = Formula::exists(
            vec![Var::from("a")],
            Formula::tr(Term::var("a"), g(encode_formula(&russell)), g(HFSet::empty())),
        );
        let roots = vec![russell, in_a.clone(), t1, t2, t3, some, Formula::not(in_a)];
        subformula_closure(&roots)
    }

    #[test]
    fn direct_etr_and_derived_agree() {
        let vn = v_stage(3).unwrap();
        let a = vec![HFSet::empty()];
        let p = pool();
        let it = iterated_truth(&vn, &a, &p, 3).unwrap();
        assert_eq!(check_iterated(&vn, &a, &it).unwrap(), None);
        let etr = iterated_truth_etr(&vn, &a, &p, 3).unwrap();
        assert!(it.bit_identical(&etr));
        let derived = derived_iterated_truth(&vn, &a, &p, 3).unwrap();
        assert!(it.bit_identical(&derived));
    }

    #[test]
    fn truth_atoms_climb_stages() {
        let vn = v_stage(3).unwrap();
        let p = pool();
        let it = iterated_truth(&vn, &[], &p, 3).unwrap();
        let t1 = p.iter().find(|f| matches!(f.kind(), Kind::Tr(x, ..) if *x == g(HFSet::nat(1)))).unwrap();
        let t2 = p.iter().find(|f| matches!(f.kind(), Kind::Tr(x, ..) if *x == g(HFSet::nat(2)))).unwrap();
        let none = Valuation::new();
        let got: Vec<bool> = (0..=3).map(|b| it.holds(b, t1, &none).unwrap()).collect();
        assert_eq!(got, vec![false, false, true, true]);
        let got: Vec<bool> = (0..=3).map(|b| it.holds(b, t2, &none).unwrap()).collect();
        assert_eq!(got, vec![false, false, false, true]);
    }

    #[test]
    fn escapes_are_errors() {
        let vn = v_stage(2).unwrap();
        let outside = Formula::mem(Term::var("q"), Term::var("q"));
        let f = Formula::tr(g(HFSet::nat(0)), g(encode_formula(&outside)), g(HFSet::empty()));
        assert_eq!(iterated_truth(&vn, &[], &[f], 1), Err(Error::PoolEscape));
    }
}
