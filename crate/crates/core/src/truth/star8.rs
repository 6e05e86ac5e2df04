//! Truth in `(V_n, ∈, A)` read off the collapse forcing `F_A`.
//!
//! A formula over `(∈, A)` is translated into the forcing language of `F_A`
//! with quantifiers turned into finite conjunctions over the clock and `∈`
//! into membership in `ε̇`; its free variables become slots for the names
//! `ṅ_a`. Then `Tr(φ, ā) ⟺ 1 ⊩ φ*(ṅ_{a_i})`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::coding::Valuation;
use crate::error::{Error, Result};
use crate::forcing::ForcingRelation;
use crate::formula::{Formula, Kind, Term, Var};
use crate::hfset::{v_stage, HFSet};
use crate::names::{a_dot, cond_check, eps_dot, n_dot, PName};
use crate::poset::{build_collapse, CollapseOptions, ForcingNotion, ONE};

use super::table::TruthTable;

/// The translation `φ ↦ φ*` for one collapse notion.
#[derive(Debug)]
pub struct StarTranslator<'p> {
    notion: &'p ForcingNotion,
    eps: PName,
    dots: BTreeMap<HFSet, PName>,
    memo: HashMap<Formula, Formula>,
}

impl<'p> StarTranslator<'p> {
    pub fn new(notion: &'p ForcingNotion) -> Result<Self> {
        let c = notion.collapse().ok_or(Error::NotCollapse)?;
        let mut dots = BTreeMap::new();
        for a in &c.targets {
            dots.insert(a.clone(), n_dot(notion, a)?);
        }
        Ok(StarTranslator {
            notion,
            eps: eps_dot(notion)?,
            dots,
            memo: HashMap::new(),
        })
    }

    /// `ṅ_a`
    pub fn dot(&self, a: &HFSet) -> Result<PName> {
        self.dots
            .get(a)
            .cloned()
            .ok_or_else(|| Error::Invalid(alloc::format!("{a:?} is not in the collapsed stage")))
    }

    fn term(&self, t: &Term) -> Result<Term> {
        match t {
            Term::Var(_) => Ok(t.clone()),
            Term::Ground(a) => Ok(Term::Name(self.dot(a)?)),
            Term::Name(_) => Err(Error::Unsupported("name constants in formulas about V_n")),
            Term::Pair(..) => Err(Error::Unsupported("pair terms in formulas about V_n")),
        }
    }

    pub fn translate(&mut self, phi: &Formula) -> Result<Formula> {
        if let Some(f) = self.memo.get(phi) {
            return Ok(f.clone());
        }
        let out = match phi.kind() {
            Kind::In(a, b) => Formula::mem(Term::pair(self.term(a)?, self.term(b)?), Term::Name(self.eps.clone())),
            Kind::Eq(a, b) => Formula::eq(self.term(a)?, self.term(b)?),
            Kind::InClass(a, c) if &**c == "A" => Formula::in_class(self.term(a)?, "A"),
            Kind::InClass(_, c) => return Err(Error::UnknownClass(alloc::string::ToString::to_string(c))),
            Kind::InG(_) | Kind::Tr(..) => return Err(Error::Unsupported("this atom in formulas about V_n")),
            Kind::Not(g) => Formula::not(self.translate(g)?),
            Kind::And(gs) => Formula::and(gs.iter().map(|g| self.translate(g)).collect::<Result<_>>()?),
            Kind::Or(gs) => Formula::or(gs.iter().map(|g| self.translate(g)).collect::<Result<_>>()?),
            Kind::Forall(vs, g) | Kind::Exists(vs, g) => {
                let body = self.translate(g)?;
                let k = self.notion.collapse().map_or(0, |c| c.clock());
                let mut parts = Vec::new();
                let total = k.pow(vs.len() as u32);
                for c in 0..total {
                    let mut c = c;
                    let mut b: BTreeMap<Var, Term> = BTreeMap::new();
                    for v in vs.iter().rev() {
                        b.entry(v.clone()).or_insert_with(|| Term::Name(cond_check(c % k)));
                        c /= k;
                    }
                    parts.push(body.instantiate(&b));
                }
                match phi.kind() {
                    Kind::Forall(..) => Formula::and(parts),
                    _ => Formula::or(parts),
                }
            }
        };
        self.memo.insert(phi.clone(), out.clone());
        Ok(out)
    }

    /// `φ*` with each free variable `x` replaced by the name `ṅ_{v(x)}`.
    pub fn instance(&mut self, phi: &Formula, v: &Valuation) -> Result<Formula> {
        let star = self.translate(phi)?;
        let mut b = BTreeMap::new();
        for x in phi.free_vars() {
            let a = v.get(x).ok_or_else(|| Error::UnboundVariable(x.clone()))?;
            b.insert(x.clone(), Term::Name(self.dot(a)?));
        }
        Ok(star.instantiate(&b))
    }
}

/// Result of reading truth off `F_A`.
#[derive(Debug, Clone)]
pub struct ForcingTruth {
    pub table: TruthTable,
    /// A condition deciding some instance differently from `1`, if any.
    pub invariance_failure: Option<(usize, Formula, Valuation)>,
    pub conditions: usize,
}

/// `Tr(φ, ā) ⟺ 1 ⊩ φ*(ṅ_{a_i})` for every pool formula and valuation over
/// `V_n`, together with the check that every condition decides each instance
/// the same way `1` does.
pub fn forcing_truth(n: usize, a: &HFSet, pool: &[Formula], opts: &CollapseOptions) -> Result<ForcingTruth> {
    let notion = build_collapse(n, a, opts)?;
    let vn = v_stage(n)?;
    let mut tr = StarTranslator::new(&notion)?;
    let mut rel = ForcingRelation::new(&notion);
    rel.add_class(a_dot(&notion)?);
    let mut table = TruthTable::new(vn, pool.to_vec())?;
    let mut invariance_failure = None;
    for e in 0..table.len() {
        let (i, tuple) = table.locate(e);
        let v = table.valuation(i, &tuple);
        let inst = tr.instance(&pool[i], &v)?;
        let s = rel.forces(&inst)?;
        let by_one = s.contains(ONE);
        table.set_entry(e, by_one);
        if invariance_failure.is_none() {
            let odd = if by_one { (0..notion.len()).find(|&p| !s.contains(p)) } else { s.ones().next() };
            if let Some(p) = odd {
                invariance_failure = Some((p, pool[i].clone(), v));
            }
        }
    }
    Ok(ForcingTruth {
        table,
        invariance_failure,
        conditions: notion.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::subformula_closure;
    use crate::truth::{tarski_truth, HfModel};
    use alloc::vec;

    fn pool() -> Vec<Formula> {
        let (x, y) = (Term::var("x"), Term::var("y"));
        let roots = vec![
            Formula::forall(vec![Var::from("x")], Formula::exists(vec![Var::from("y")], Formula::mem(x.clone(), y.clone()))),
            Formula::exists(vec![Var::from("y")], Formula::and(vec![Formula::mem(y.clone(), x.clone()), Formula::in_class(y.clone(), "A")])),
            Formula::not(Formula::eq(x.clone(), y.clone())),
            Formula::in_class(x.clone(), "A"),
            Formula::mem(Term::Ground(HFSet::empty()), x),
        ];
        subformula_closure(&roots)
    }

    #[test]
    fn matches_tarski_at_two() {
        let vn = v_stage(2).unwrap();
        for mask in 0..4u32 {
            let a = HFSet::make((0..2).filter(|i| mask >> i & 1 == 1).map(|i| vn[i].clone()));
            let ft = forcing_truth(2, &a, &pool(), &CollapseOptions::default()).unwrap();
            let m = HfModel::new(vn.clone()).with_class("A", a.children().iter().cloned());
            let t = tarski_truth(&m, &pool()).unwrap();
            assert!(ft.table.bit_identical(&t), "A = {a:?}");
            assert_eq!(ft.invariance_failure, None);
        }
    }

    #[test]
    fn numerals_are_not_invariant() {
        // With m̌ in place of ṅ_a the value depends on the generic bijection.
        let a = HFSet::empty();
        let notion = build_collapse(2, &a, &CollapseOptions::default()).unwrap();
        let mut tr = StarTranslator::new(&notion).unwrap();
        let mut rel = ForcingRelation::new(&notion);
        rel.add_class(a_dot(&notion).unwrap());
        let phi = Formula::eq(Term::var("x"), Term::Ground(HFSet::empty()));
        let star = tr.translate(&phi).unwrap();
        let mut b = BTreeMap::new();
        b.insert(Var::from("x"), Term::Name(cond_check(0)));
        let s = rel.forces(&star.instantiate(&b)).unwrap();
        assert!(!s.contains(ONE));
        assert!(!s.is_clear());
    }
}
