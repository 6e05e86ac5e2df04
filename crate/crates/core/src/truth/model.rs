use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::hash::Hash;

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::formula::{ClassId, Formula, Kind, Term, Var};
use crate::hfset::HFSet;

/// A first-order structure the evaluator can run over.
pub trait Model {
    type Elem: Clone + Eq + Hash + fmt::Debug;

    /// Range of the quantifiers.
    fn domain(&self) -> &[Self::Elem];
    /// Value of a ground or name constant.
    fn constant(&self, t: &Term) -> Result<Self::Elem>;
    fn pair(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn equal(&self, a: &Self::Elem, b: &Self::Elem) -> Result<bool> {
        Ok(a == b)
    }
    fn member(&self, a: &Self::Elem, b: &Self::Elem) -> Result<bool>;
    fn in_class(&self, a: &Self::Elem, class: &ClassId) -> Result<bool>;
    fn in_g(&self, _a: &Self::Elem) -> Result<bool> {
        Err(Error::Unsupported("the generic-filter predicate in this structure"))
    }
    fn tr(&self, _x: &Self::Elem, _y: &Self::Elem, _z: &Self::Elem) -> Result<bool> {
        Err(Error::Unsupported("truth atoms without a backing predicate"))
    }
}

/// Interpretation of `T̂r` atoms over HF sets.
pub trait TrOracle {
    fn holds(&self, x: &HFSet, y: &HFSet, z: &HFSet) -> Result<bool>;
}

/// `(D, ∈, classes...)` with `D` a list of HF sets. Constants may denote sets
/// outside `D`; membership is always the true one.
pub struct HfModel<'a> {
    domain: Vec<HFSet>,
    classes: BTreeMap<ClassId, HashSet<HFSet>>,
    generic: Option<HashSet<HFSet>>,
    tr: Option<&'a dyn TrOracle>,
}

impl fmt::Debug for HfModel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HfModel")
            .field("domain", &self.domain.len())
            .field("classes", &self.classes.keys().collect::<Vec<_>>())
            .field("tr", &self.tr.is_some())
            .finish()
    }
}

impl<'a> HfModel<'a> {
    pub fn new(domain: Vec<HFSet>) -> Self {
        HfModel {
            domain,
            classes: BTreeMap::new(),
            generic: None,
            tr: None,
        }
    }

    pub fn set_class<I: IntoIterator<Item = HFSet>>(&mut self, id: &str, members: I) {
        self.classes.insert(ClassId::from(id), members.into_iter().collect());
    }

    pub fn with_class<I: IntoIterator<Item = HFSet>>(mut self, id: &str, members: I) -> Self {
        self.set_class(id, members);
        self
    }

    /// Interprets `x ∈ Ġ` as membership in `members`.
    pub fn with_generic<I: IntoIterator<Item = HFSet>>(mut self, members: I) -> Self {
        self.generic = Some(members.into_iter().collect());
        self
    }

    pub fn with_tr(mut self, oracle: &'a dyn TrOracle) -> Self {
        self.tr = Some(oracle);
        self
    }

    pub fn domain_sets(&self) -> &[HFSet] {
        &self.domain
    }
}

impl Model for HfModel<'_> {
    type Elem = HFSet;

    fn domain(&self) -> &[HFSet] {
        &self.domain
    }

    fn constant(&self, t: &Term) -> Result<HFSet> {
        match t {
            Term::Ground(x) => Ok(x.clone()),
            _ => Err(Error::Unsupported("name constants over HF structures")),
        }
    }

    fn pair(&self, a: &HFSet, b: &HFSet) -> Result<HFSet> {
        Ok(HFSet::kpair(a.clone(), b.clone()))
    }

    fn member(&self, a: &HFSet, b: &HFSet) -> Result<bool> {
        Ok(b.contains(a))
    }

    fn in_class(&self, a: &HFSet, class: &ClassId) -> Result<bool> {
        self.classes
            .get(class)
            .map(|c| c.contains(a))
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    fn in_g(&self, a: &HFSet) -> Result<bool> {
        match &self.generic {
            Some(g) => Ok(g.contains(a)),
            None => Err(Error::Unsupported("the generic-filter predicate in this structure")),
        }
    }

    fn tr(&self, x: &HFSet, y: &HFSet, z: &HFSet) -> Result<bool> {
        match self.tr {
            Some(o) => o.holds(x, y, z),
            None => Err(Error::Unsupported("truth atoms without a backing predicate")),
        }
    }
}

/// Recursive evaluator with a memo on quantified subformulas, keyed by the
/// formula and the values of its free variables.
pub struct Evaluator<'m, M: Model> {
    model: &'m M,
    env: Vec<(Var, M::Elem)>,
    memo: HashMap<(Formula, Vec<M::Elem>), bool>,
}

impl<M: Model> fmt::Debug for Evaluator<'_, M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator").field("memo", &self.memo.len()).finish()
    }
}

impl<'m, M: Model> Evaluator<'m, M> {
    pub fn new(model: &'m M) -> Self {
        Evaluator {
            model,
            env: Vec::new(),
            memo: HashMap::new(),
        }
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn clear_memo(&mut self) {
        self.memo.clear();
    }

    /// Evaluates `phi` with its free variables bound by `env`.
    pub fn eval_in(&mut self, phi: &Formula, env: &[(Var, M::Elem)]) -> Result<bool> {
        let saved = core::mem::take(&mut self.env);
        self.env.extend(env.iter().cloned());
        let out = self.eval(phi);
        self.env = saved;
        out
    }

    pub fn eval_closed(&mut self, phi: &Formula) -> Result<bool> {
        self.eval_in(phi, &[])
    }

    fn lookup(&self, v: &Var) -> Result<M::Elem> {
        self.env
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, x)| x.clone())
            .ok_or_else(|| Error::UnboundVariable(v.clone()))
    }

    pub fn term(&self, t: &Term) -> Result<M::Elem> {
        match t {
            Term::Var(v) => self.lookup(v),
            Term::Pair(a, b) => {
                let a = self.term(a)?;
                let b = self.term(b)?;
                self.model.pair(&a, &b)
            }
            _ => self.model.constant(t),
        }
    }

    fn eval(&mut self, phi: &Formula) -> Result<bool> {
        match phi.kind() {
            Kind::Eq(a, b) => {
                let (a, b) = (self.term(a)?, self.term(b)?);
                self.model.equal(&a, &b)
            }
            Kind::In(a, b) => {
                let (a, b) = (self.term(a)?, self.term(b)?);
                self.model.member(&a, &b)
            }
            Kind::InClass(a, c) => {
                let a = self.term(a)?;
                self.model.in_class(&a, c)
            }
            Kind::InG(a) => {
                let a = self.term(a)?;
                self.model.in_g(&a)
            }
            Kind::Tr(x, y, z) => {
                let (x, y, z) = (self.term(x)?, self.term(y)?, self.term(z)?);
                self.model.tr(&x, &y, &z)
            }
            Kind::Not(g) => Ok(!self.eval(g)?),
            Kind::And(gs) => {
                for g in gs {
                    if !self.eval(g)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Kind::Or(gs) => {
                for g in gs {
                    if self.eval(g)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Kind::Forall(vs, g) | Kind::Exists(vs, g) => {
                let key_vals: Vec<M::Elem> = phi
                    .free_vars()
                    .iter()
                    .map(|v| self.lookup(v))
                    .collect::<Result<_>>()?;
                let key = (phi.clone(), key_vals);
                if let Some(&b) = self.memo.get(&key) {
                    return Ok(b);
                }
                let universal = matches!(phi.kind(), Kind::Forall(..));
                let b = self.quantify(vs, g, universal)?;
                self.memo.insert(key, b);
                Ok(b)
            }
        }
    }

    fn quantify(&mut self, vs: &[Var], g: &Formula, universal: bool) -> Result<bool> {
        let n = self.model.domain().len();
        if vs.is_empty() {
            return self.eval(g);
        }
        if n == 0 {
            return Ok(universal);
        }
        let k = vs.len();
        let total = n
            .checked_pow(k as u32)
            .ok_or(Error::Budget { what: "quantifier block", needed: u128::MAX, limit: usize::MAX as u128 })?;
        let base = self.env.len();
        for v in vs {
            self.env.push((v.clone(), self.model.domain()[0].clone()));
        }
        let mut out = universal;
        for c in 0..total {
            let mut c = c;
            for j in (0..k).rev() {
                self.env[base + j].1 = self.model.domain()[c % n].clone();
                c /= n;
            }
            match self.eval(g) {
                Ok(b) if b != universal => {
                    out = !universal;
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    self.env.truncate(base);
                    return Err(e);
                }
            }
        }
        self.env.truncate(base);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfset::{theta_formula, v_stage};
    use alloc::vec;

    #[test]
    fn theta_defines_each_set() {
        let dom = v_stage(3).unwrap();
        let m = HfModel::new(dom.clone());
        let mut ev = Evaluator::new(&m);
        for a in &dom {
            let th = theta_formula(a);
            for x in &dom {
                let got = ev.eval_in(&th, &[(Var::from("x"), x.clone())]).unwrap();
                assert_eq!(got, a == x);
            }
        }
    }

    #[test]
    fn quantifier_blocks() {
        let dom = v_stage(3).unwrap();
        let m = HfModel::new(dom);
        let mut ev = Evaluator::new(&m);
        let (x, y) = (Term::var("x"), Term::var("y"));
        // 2 has rank 2, so no set in V_3 contains it.
        let f = Formula::forall(
            vec![Var::from("x"), Var::from("y")],
            Formula::exists(
                vec![Var::from("z")],
                Formula::and(vec![Formula::mem(x.clone(), Term::var("z")), Formula::mem(y.clone(), Term::var("z"))]),
            ),
        );
        assert!(!ev.eval_closed(&f).unwrap());
        let g = Formula::exists(vec![Var::from("x")], Formula::forall(vec![Var::from("y")], Formula::not(Formula::mem(y, x))));
        assert!(ev.eval_closed(&g).unwrap());
        let open = Formula::mem(Term::var("q"), Term::var("q"));
        assert!(matches!(ev.eval_closed(&open), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn empty_domain() {
        let m = HfModel::new(Vec::new());
        let mut ev = Evaluator::new(&m);
        let f = Formula::forall(vec![Var::from("x")], Formula::falsity());
        assert!(ev.eval_closed(&f).unwrap());
        assert!(!ev.eval_closed(&Formula::exists(vec![Var::from("x")], Formula::truth())).unwrap());
    }
}
