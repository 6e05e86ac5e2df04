//! Generic extensions of finite notions, and the truth lemma.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::formula::{ClassId, Formula, Term};
use crate::hfset::HFSet;
use crate::names::{eval_class, Evaluator as NameEvaluator, PName};
use crate::poset::Filter;
use crate::truth::{Evaluator, Model};

use super::relation::{Atomic, ForcingRelation};

/// `M[G]` restricted to the values of a name universe, with the class names
/// of a relation evaluated at `G`.
#[derive(Debug, Clone)]
pub struct Extension {
    filter: Filter,
    domain: Vec<HFSet>,
    classes: BTreeMap<ClassId, BTreeSet<HFSet>>,
    generic: BTreeSet<HFSet>,
}

impl Extension {
    pub fn new(rel: &ForcingRelation<'_>, g: &Filter) -> Self {
        let mut ev = NameEvaluator::new(g);
        let domain: BTreeSet<HFSet> = rel.universe().iter().map(|s| ev.eval(s)).collect();
        let classes = rel.classes().map(|c| (c.id.clone(), eval_class(c, g))).collect();
        let generic = g.members().map(HFSet::nat).collect();
        Extension {
            filter: g.clone(),
            domain: domain.into_iter().collect(),
            classes,
            generic,
        }
    }

    pub fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn value(&self, sigma: &PName) -> HFSet {
        crate::names::eval_name(sigma, &self.filter)
    }
}

impl Model for Extension {
    type Elem = HFSet;

    fn domain(&self) -> &[HFSet] {
        &self.domain
    }

    fn constant(&self, t: &Term) -> Result<HFSet> {
        match t {
            Term::Name(n) => Ok(self.value(n)),
            _ => Err(Error::Unsupported("ground constants in the forcing language")),
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
            .ok_or_else(|| Error::UnknownClass(alloc::string::ToString::to_string(class)))
    }

    fn in_g(&self, a: &HFSet) -> Result<bool> {
        Ok(self.generic.contains(a))
    }
}

/// The universe modulo `σ ~ τ ⟺ ∃p∈G p ⊩ σ = τ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    /// Least universe index of each class.
    pub reps: Vec<usize>,
    /// Class number of each universe index.
    pub class_of: Vec<usize>,
}

/// Builds the quotient and checks that it is a congruence for `∈` and that
/// it is isomorphic, via the classes, to the evaluated names.
pub fn quotient(rel: &mut ForcingRelation<'_>, g: &Filter) -> Result<Quotient> {
    let universe = rel.universe().to_vec();
    let n = universe.len();
    let meets = |s: &crate::poset::CondSet| s.ones().any(|p| g.contains(p));
    let mut eq = alloc::vec![alloc::vec![false; n]; n];
    let mut mem = alloc::vec![alloc::vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            eq[i][j] = meets(&rel.atomic(Atomic::Eq, &universe[i], &universe[j]));
            mem[i][j] = meets(&rel.atomic(Atomic::In, &universe[i], &universe[j]));
        }
    }
    let mut class_of = alloc::vec![usize::MAX; n];
    let mut reps = Vec::new();
    for i in 0..n {
        if class_of[i] != usize::MAX {
            continue;
        }
        let c = reps.len();
        reps.push(i);
        for j in i..n {
            if eq[i][j] {
                if class_of[j] != usize::MAX {
                    return Err(Error::Extension(format!("names {j} falls in two classes")));
                }
                class_of[j] = c;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if eq[i][j] != (class_of[i] == class_of[j]) {
                return Err(Error::Extension(format!("equality is not an equivalence at ({i}, {j})")));
            }
            let (ri, rj) = (reps[class_of[i]], reps[class_of[j]]);
            if mem[i][j] != mem[ri][rj] {
                return Err(Error::Extension(format!("membership is not a congruence at ({i}, {j})")));
            }
        }
    }
    let mut ev = NameEvaluator::new(g);
    let values: Vec<HFSet> = universe.iter().map(|s| ev.eval(s)).collect();
    for i in 0..n {
        for j in 0..n {
            if eq[i][j] != (values[i] == values[j]) || mem[i][j] != values[j].contains(&values[i]) {
                return Err(Error::Extension(format!(
                    "forced atomic facts disagree with evaluation at ({i}, {j})"
                )));
            }
        }
    }
    Ok(Quotient { reps, class_of })
}

/// For every generic filter and sentence: `M[G] ⊨ φ ⟺ ∃p∈G p ⊩ φ`.
/// Returns the first failure as `(filter index, sentence)`.
pub fn truth_lemma_check(
    rel: &mut ForcingRelation<'_>,
    filters: &[Filter],
    sentences: &[Formula],
) -> Result<Option<(usize, Formula)>> {
    for (k, g) in filters.iter().enumerate() {
        let ext = Extension::new(rel, g);
        let mut ev = Evaluator::new(&ext);
        for phi in sentences {
            let forced = rel.forces(phi)?.ones().any(|p| g.contains(p));
            if forced != ev.eval_closed(phi)? {
                return Ok(Some((k, phi.clone())));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Var;
    use crate::names::{cond_check, name_universe, UniverseMode, DEFAULT_NAME_BUDGET};
    use crate::poset::ForcingNotion;
    use alloc::vec;

    #[test]
    fn fork_truth_lemma() {
        let p = ForcingNotion::fork();
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u.clone()).unwrap();
        let x = Term::var("x");
        let sentences = vec![
            Formula::exists(vec![Var::from("x")], Formula::in_g(x.clone())),
            Formula::forall(vec![Var::from("x")], Formula::not(Formula::mem(x.clone(), x.clone()))),
            Formula::exists(vec![Var::from("x")], Formula::and(vec![Formula::in_g(x.clone()), Formula::not(Formula::eq(x, Term::Name(cond_check(0))))])),
            Formula::mem(Term::Name(PName::empty()), Term::Name(u[u.len() - 1].clone())),
        ];
        let filters = p.generic_filters();
        for g in &filters {
            let q = quotient(&mut rel, g).unwrap();
            assert!(q.reps.len() <= u.len());
        }
        assert_eq!(truth_lemma_check(&mut rel, &filters, &sentences).unwrap(), None);
    }

    #[test]
    fn a_non_generic_filter_breaks_the_lemma() {
        let p = ForcingNotion::fork();
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u).unwrap();
        let top = Filter::new(p.above(0).clone());
        let some = Formula::or((1..p.len()).map(|q| Formula::in_g(Term::Name(cond_check(q)))).collect());
        assert!(truth_lemma_check(&mut rel, &[top], &[some]).unwrap().is_some());
    }
}
