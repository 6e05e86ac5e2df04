use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;
use hashbrown::HashMap;

use crate::coding::Valuation;
use crate::error::{Error, Result};
use crate::etr::{etr_solve, verify_solution, RecursionInstance};
use crate::formula::{is_subformula_closed, Formula, Kind, Var};
use crate::hfset::HFSet;

use super::model::{Evaluator, HfModel};

/// Decides an atomic formula under an environment.
type AtomFn<'a> = dyn FnMut(&Formula, &[(Var, HFSet)]) -> Result<bool> + 'a;

/// Upper bound on the number of `(formula, valuation)` entries of one table.
pub const TABLE_BUDGET: usize = 1 << 24;

/// Truth values of a pool over a finite domain, one bit per formula and
/// assignment of its free variables (in `free_vars()` order, first variable
/// most significant).
#[derive(Clone, PartialEq, Eq)]
pub struct TruthTable {
    domain: Vec<HFSet>,
    dindex: HashMap<HFSet, usize>,
    pool: Vec<Formula>,
    index: HashMap<Formula, usize>,
    offsets: Vec<usize>,
    bits: FixedBitSet,
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruthTable")
            .field("domain", &self.domain.len())
            .field("pool", &self.pool.len())
            .field("true", &self.bits.count_ones(..))
            .finish()
    }
}

impl TruthTable {
    /// An all-false table.
    pub fn new(domain: Vec<HFSet>, pool: Vec<Formula>) -> Result<TruthTable> {
        let n = domain.len();
        let mut offsets = Vec::with_capacity(pool.len() + 1);
        let mut total = 0usize;
        for f in &pool {
            offsets.push(total);
            let k = f.free_vars().len() as u32;
            let size = n
                .checked_pow(k)
                .filter(|s| total + s <= TABLE_BUDGET)
                .ok_or(Error::budget("truth table entries", (n as u128).saturating_pow(k), TABLE_BUDGET as u64))?;
            total += size;
        }
        offsets.push(total);
        let dindex = domain.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        let index = pool.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        Ok(TruthTable {
            domain,
            dindex,
            pool,
            index,
            offsets,
            bits: FixedBitSet::with_capacity(total),
        })
    }

    pub fn domain(&self) -> &[HFSet] {
        &self.domain
    }

    pub fn pool(&self) -> &[Formula] {
        &self.pool
    }

    pub fn position(&self, phi: &Formula) -> Option<usize> {
        self.index.get(phi).copied()
    }

    pub fn domain_index(&self, x: &HFSet) -> Option<usize> {
        self.dindex.get(x).copied()
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count_true(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn entries_of(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Global entry index of formula `i` at the given assignment.
    pub fn entry(&self, i: usize, tuple: &[usize]) -> usize {
        let n = self.domain.len();
        self.offsets[i] + tuple.iter().fold(0, |acc, &t| acc * n + t)
    }

    /// Inverse of [`TruthTable::entry`].
    pub fn locate(&self, e: usize) -> (usize, Vec<usize>) {
        let i = self.offsets.partition_point(|&o| o <= e) - 1;
        let k = self.pool[i].free_vars().len();
        let n = self.domain.len();
        let mut rest = e - self.offsets[i];
        let mut tuple = alloc::vec![0; k];
        for j in (0..k).rev() {
            tuple[j] = rest % n;
            rest /= n;
        }
        (i, tuple)
    }

    pub fn get(&self, i: usize, tuple: &[usize]) -> bool {
        self.bits.contains(self.entry(i, tuple))
    }

    pub fn get_entry(&self, e: usize) -> bool {
        self.bits.contains(e)
    }

    pub fn set_entry(&mut self, e: usize, value: bool) {
        self.bits.set(e, value);
    }

    /// Value at a valuation whose domain must be exactly the free variables.
    pub fn get_valuation(&self, phi: &Formula, v: &Valuation) -> Option<bool> {
        let i = self.position(phi)?;
        let fv = phi.free_vars();
        if v.len() != fv.len() {
            return None;
        }
        let tuple: Option<Vec<usize>> = fv.iter().map(|x| v.get(x).and_then(|a| self.domain_index(a))).collect();
        Some(self.get(i, &tuple?))
    }

    pub fn valuation(&self, i: usize, tuple: &[usize]) -> Valuation {
        self.pool[i]
            .free_vars()
            .iter()
            .zip(tuple)
            .map(|(v, &t)| (v.clone(), self.domain[t].clone()))
            .collect()
    }

    pub fn env(&self, i: usize, tuple: &[usize]) -> Vec<(Var, HFSet)> {
        self.pool[i]
            .free_vars()
            .iter()
            .zip(tuple)
            .map(|(v, &t)| (v.clone(), self.domain[t].clone()))
            .collect()
    }

    /// Same shape, same bits.
    pub fn bit_identical(&self, other: &TruthTable) -> bool {
        self.pool == other.pool && self.domain == other.domain && self.bits == other.bits
    }

    /// Entries where the two tables disagree.
    pub fn differences(&self, other: &TruthTable) -> Vec<usize> {
        let mut d = self.bits.clone();
        d.symmetric_difference_with(&other.bits);
        d.ones().collect()
    }

    /// Entries that decide `(i, tuple)`: the operands of a connective, or
    /// every instance of a quantifier. Empty for atoms.
    pub fn subentries(&self, i: usize, tuple: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
        let mut out = Vec::new();
        let mut record = |j: usize, t: &[usize]| -> Result<bool> {
            out.push((j, t.to_vec()));
            Ok(matches!(self.pool[i].kind(), Kind::Forall(..) | Kind::And(_)))
        };
        self.clause(i, tuple, &mut |_, _| Ok(false), &mut record)?;
        Ok(out)
    }

    /// Recomputes entry `(i, tuple)` from its immediate subformulas.
    ///
    /// `atom` decides atomic formulas under an environment; `lookup` reads
    /// other entries of the pool.
    pub(crate) fn clause(
        &self,
        i: usize,
        tuple: &[usize],
        atom: &mut AtomFn<'_>,
        lookup: &mut dyn FnMut(usize, &[usize]) -> Result<bool>,
    ) -> Result<bool> {
        let phi = &self.pool[i];
        let fv = phi.free_vars();
        let child = |c: &Formula, bound: &[(&Var, usize)]| -> Result<(usize, Vec<usize>)> {
            let ci = self.position(c).ok_or(Error::PoolNotClosed)?;
            let t = c
                .free_vars()
                .iter()
                .map(|v| {
                    bound
                        .iter()
                        .rev()
                        .find(|(w, _)| *w == v)
                        .map(|(_, t)| *t)
                        .or_else(|| fv.binary_search(v).ok().map(|j| tuple[j]))
                        .ok_or_else(|| Error::UnboundVariable(v.clone()))
                })
                .collect::<Result<_>>()?;
            Ok((ci, t))
        };
        match phi.kind() {
            Kind::Not(g) => {
                let (ci, t) = child(g, &[])?;
                Ok(!lookup(ci, &t)?)
            }
            Kind::And(gs) => {
                for g in gs {
                    let (ci, t) = child(g, &[])?;
                    if !lookup(ci, &t)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Kind::Or(gs) => {
                for g in gs {
                    let (ci, t) = child(g, &[])?;
                    if lookup(ci, &t)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Kind::Forall(vs, g) | Kind::Exists(vs, g) => {
                let universal = matches!(phi.kind(), Kind::Forall(..));
                let n = self.domain.len();
                if vs.is_empty() {
                    let (ci, t) = child(g, &[])?;
                    return lookup(ci, &t);
                }
                if n == 0 {
                    return Ok(universal);
                }
                // Only the bound variables that occur free in the body matter.
                let live: Vec<&Var> = {
                    let mut l: Vec<&Var> = Vec::new();
                    for v in vs.iter().rev() {
                        if g.free_vars().binary_search(v).is_ok() && !l.contains(&v) {
                            l.push(v);
                        }
                    }
                    l
                };
                let total = n.checked_pow(live.len() as u32).ok_or(Error::budget(
                    "quantifier block",
                    u128::MAX,
                    usize::MAX as u64,
                ))?;
                for c in 0..total {
                    let mut c = c;
                    let mut bound = Vec::with_capacity(live.len());
                    for v in &live {
                        bound.push((*v, c % n));
                        c /= n;
                    }
                    let (ci, t) = child(g, &bound)?;
                    if lookup(ci, &t)? != universal {
                        return Ok(!universal);
                    }
                }
                Ok(universal)
            }
            _ => atom(phi, &self.env(i, tuple)),
        }
    }
}

/// Checks that `table` satisfies the Tarskian clauses over `model`: atoms are
/// decided by the structure, the rest by their immediate subformulas.
/// Returns the first violated entry.
pub fn check_clauses(model: &HfModel<'_>, table: &TruthTable) -> Result<Option<(Formula, Valuation)>> {
    let mut ev = Evaluator::new(model);
    for e in 0..table.len() {
        let (i, tuple) = table.locate(e);
        let expect = table.clause(
            i,
            &tuple,
            &mut |phi, env| ev.eval_in(phi, env),
            &mut |j, t| Ok(table.get(j, t)),
        )?;
        if expect != table.get_entry(e) {
            return Ok(Some((table.pool()[i].clone(), table.valuation(i, &tuple))));
        }
    }
    Ok(None)
}

fn require_closed(pool: &[Formula]) -> Result<()> {
    if is_subformula_closed(pool) {
        Ok(())
    } else {
        Err(Error::PoolNotClosed)
    }
}

/// The ETR instance for Tarskian truth: one stage per formula rank, each
/// entry decided at the stage of its rank from entries of lower rank.
pub fn tarski_instance<'a>(model: &'a HfModel<'a>, shape: &'a TruthTable) -> RecursionInstance<'a> {
    let length = shape.pool().iter().map(|f| f.rank() + 1).max().unwrap_or(0);
    let domain: Vec<HFSet> = (0..shape.len()).map(|e| HFSet::ack(e as u64)).collect();
    RecursionInstance::callable(length, domain, move |e, _, view| {
        let (i, tuple) = shape.locate(e);
        if shape.pool()[i].rank() != view.stage() {
            return Ok(false);
        }
        let mut ev = Evaluator::new(model);
        shape.clause(i, &tuple, &mut |phi, env| ev.eval_in(phi, env), &mut |j, t| {
            view.contains(shape.pool()[j].rank(), shape.entry(j, t))
        })
    })
}

/// Tarskian truth for a subformula-closed pool, computed by transfinite
/// recursion on formula rank.
pub fn tarski_truth(model: &HfModel<'_>, pool: &[Formula]) -> Result<TruthTable> {
    require_closed(pool)?;
    let mut table = TruthTable::new(model.domain_sets().to_vec(), pool.to_vec())?;
    let inst = tarski_instance(model, &table);
    let sol = etr_solve(&inst)?;
    debug_assert_eq!(verify_solution(&inst, &sol), Ok(None));
    let mut bits = FixedBitSet::with_capacity(table.len());
    for s in &sol.slices {
        bits.union_with(s);
    }
    drop(inst);
    table.bits = bits;
    Ok(table)
}

/// The same table by direct evaluation of every entry; the brute-force oracle.
pub fn tarski_truth_direct(model: &HfModel<'_>, pool: &[Formula]) -> Result<TruthTable> {
    let mut table = TruthTable::new(model.domain_sets().to_vec(), pool.to_vec())?;
    let mut ev = Evaluator::new(model);
    for e in 0..table.len() {
        let (i, tuple) = table.locate(e);
        let env = table.env(i, &tuple);
        if ev.eval_in(&table.pool[i], &env)? {
            table.bits.insert(e);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{subformula_closure, Term};
    use crate::hfset::v_stage;
    use alloc::vec;

    pub(crate) fn small_pool() -> Vec<Formula> {
        let (x, y) = (Term::var("x"), Term::var("y"));
        let vx = || vec![Var::from("x")];
        let vy = || vec![Var::from("y")];
        let roots = vec![
            Formula::forall(vx(), Formula::exists(vy(), Formula::mem(x.clone(), y.clone()))),
            Formula::exists(vx(), Formula::forall(vy(), Formula::not(Formula::mem(y.clone(), x.clone())))),
            Formula::or(vec![Formula::in_class(x.clone(), "A"), Formula::eq(x.clone(), y.clone())]),
            Formula::forall(vy(), Formula::implies(Formula::mem(y.clone(), x.clone()), Formula::in_class(y.clone(), "A"))),
            Formula::mem(Term::Ground(HFSet::empty()), x),
        ];
        subformula_closure(&roots)
    }

    #[test]
    fn etr_matches_direct() {
        for n in 1..=3 {
            let dom = v_stage(n).unwrap();
            let a: Vec<HFSet> = dom.iter().filter(|x| x.len() % 2 == 0).cloned().collect();
            let m = HfModel::new(dom).with_class("A", a);
            let pool = small_pool();
            let t = tarski_truth(&m, &pool).unwrap();
            let d = tarski_truth_direct(&m, &pool).unwrap();
            assert!(t.bit_identical(&d));
            assert_eq!(check_clauses(&m, &t).unwrap(), None);
        }
    }

    #[test]
    fn any_flip_breaks_a_clause() {
        let dom = v_stage(2).unwrap();
        let m = HfModel::new(dom).with_class("A", [HFSet::empty()]);
        let pool = small_pool();
        let t = tarski_truth(&m, &pool).unwrap();
        for e in 0..t.len() {
            let mut bad = t.clone();
            bad.set_entry(e, !bad.get_entry(e));
            assert!(check_clauses(&m, &bad).unwrap().is_some(), "entry {e}");
        }
    }

    #[test]
    fn locate_inverts_entry() {
        let dom = v_stage(3).unwrap();
        let t = TruthTable::new(dom, small_pool()).unwrap();
        for e in 0..t.len() {
            let (i, tuple) = t.locate(e);
            assert_eq!(t.entry(i, &tuple), e);
        }
    }

    #[test]
    fn open_pools_are_refused() {
        let m = HfModel::new(v_stage(2).unwrap());
        let f = Formula::not(Formula::mem(Term::var("x"), Term::var("x")));
        assert_eq!(tarski_truth(&m, &[f]), Err(Error::PoolNotClosed));
    }
}
