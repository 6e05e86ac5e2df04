//! The regular-open completion `RO(P)` and Boolean values of atomic statements.
//!
//! Open sets are the downward closed sets of conditions; the regular ones are
//! the fixed points of `U ↦ {p : U is dense below p}`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::names::{cond_check, ClassName, PName};
use crate::poset::{CondSet, ForcingNotion};

use super::relation::{Atomic, ForcingRelation};

pub const ALGEBRA_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct RegularOpenAlgebra<'p> {
    notion: &'p ForcingNotion,
    elements: Vec<CondSet>,
    index: HashMap<CondSet, usize>,
}

impl<'p> RegularOpenAlgebra<'p> {
    /// Generated from the `i(p)` under meets and complements.
    pub fn new(notion: &'p ForcingNotion) -> Result<Self> {
        let mut alg = RegularOpenAlgebra {
            notion,
            elements: Vec::new(),
            index: HashMap::new(),
        };
        let mut queue: VecDeque<CondSet> = VecDeque::new();
        queue.push_back(notion.empty_set());
        queue.push_back(notion.full_set());
        for p in 0..notion.len() {
            queue.push_back(alg.embed(p));
        }
        while let Some(x) = queue.pop_front() {
            if alg.index.contains_key(&x) {
                continue;
            }
            if alg.elements.len() >= ALGEBRA_BUDGET {
                return Err(Error::budget("regular open algebra", alg.elements.len() as u64 + 1, ALGEBRA_BUDGET as u64));
            }
            alg.index.insert(x.clone(), alg.elements.len());
            alg.elements.push(x.clone());
            queue.push_back(alg.neg_set(&x));
            for y in alg.elements.clone() {
                let mut m = x.clone();
                m.intersect_with(&y);
                if !alg.index.contains_key(&m) {
                    queue.push_back(m);
                }
            }
        }
        Ok(alg)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CondSet] {
        &self.elements
    }

    pub fn regularize(&self, u: &CondSet) -> CondSet {
        self.notion.dense_below_set(u)
    }

    /// `i(p) = reg(↓p)`
    pub fn embed(&self, p: usize) -> CondSet {
        self.regularize(self.notion.below(p))
    }

    pub fn zero(&self) -> CondSet {
        self.notion.empty_set()
    }

    pub fn one(&self) -> CondSet {
        self.notion.full_set()
    }

    fn neg_set(&self, x: &CondSet) -> CondSet {
        let mut c = x.clone();
        c.toggle_range(..);
        self.notion.interior(&c)
    }

    pub fn neg(&self, x: &CondSet) -> CondSet {
        self.neg_set(x)
    }

    pub fn meet(&self, x: &CondSet, y: &CondSet) -> CondSet {
        let mut m = x.clone();
        m.intersect_with(y);
        m
    }

    pub fn join(&self, x: &CondSet, y: &CondSet) -> CondSet {
        let mut u = x.clone();
        u.union_with(y);
        self.regularize(&u)
    }

    pub fn join_all<'a, I: IntoIterator<Item = &'a CondSet>>(&self, xs: I) -> CondSet {
        let mut u = self.zero();
        for x in xs {
            u.union_with(x);
        }
        self.regularize(&u)
    }

    pub fn le(&self, x: &CondSet, y: &CondSet) -> bool {
        x.is_subset(y)
    }

    pub fn contains(&self, x: &CondSet) -> bool {
        self.index.contains_key(x)
    }

    /// Exhaustive check of the Boolean algebra axioms on the element list.
    pub fn check_boolean(&self) -> core::result::Result<(), String> {
        let els = &self.elements;
        for x in els {
            if self.regularize(x) != *x {
                return Err(format!("{:?} is not regular open", x.ones().collect::<Vec<_>>()));
            }
            if !self.contains(&self.neg(x)) {
                return Err("not closed under complement".into());
            }
            if !self.meet(x, &self.neg(x)).is_clear() || self.join(x, &self.neg(x)) != self.one() {
                return Err(format!("{:?} has no complement", x.ones().collect::<Vec<_>>()));
            }
        }
        for x in els {
            for y in els {
                let m = self.meet(x, y);
                let j = self.join(x, y);
                if !self.contains(&m) || !self.contains(&j) {
                    return Err("not closed under meet and join".into());
                }
                if self.join(x, &m) != *x || self.meet(x, &j) != *x {
                    return Err("absorption fails".into());
                }
                for z in els {
                    if self.meet(x, &self.join(y, z)) != self.join(&self.meet(x, y), &self.meet(x, z)) {
                        return Err("distributivity fails".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// `i` is order preserving, preserves incompatibility, has nonzero values
    /// and dense range; on separative notions it also reflects the order.
    pub fn check_dense_embedding(&self) -> core::result::Result<(), String> {
        let p = self.notion;
        let n = p.len();
        let images: Vec<CondSet> = (0..n).map(|q| self.embed(q)).collect();
        for a in 0..n {
            if images[a].is_clear() {
                return Err(format!("i({a}) = 0"));
            }
            for b in 0..n {
                if p.le(a, b) && !self.le(&images[a], &images[b]) {
                    return Err(format!("i is not monotone at ({a}, {b})"));
                }
                if p.compatible(a, b) == self.meet(&images[a], &images[b]).is_clear() {
                    return Err(format!("i does not preserve incompatibility at ({a}, {b})"));
                }
                if p.is_separative() && self.le(&images[a], &images[b]) && !p.le(a, b) {
                    return Err(format!("i does not reflect the order at ({a}, {b})"));
                }
            }
        }
        for x in &self.elements {
            if !x.is_clear() && !images.iter().any(|i| self.le(i, x)) {
                return Err(format!("{:?} has nothing of the form i(p) below it", x.ones().collect::<Vec<_>>()));
            }
        }
        Ok(())
    }
}

/// `⟦σ ∈ τ⟧`, `⟦σ = τ⟧`, `⟦σ ⊆ τ⟧` computed by recursion on names.
#[derive(Debug)]
pub struct BooleanValues<'a, 'p> {
    alg: &'a RegularOpenAlgebra<'p>,
    memo: HashMap<(Atomic, PName, PName), CondSet>,
}

impl<'a, 'p> BooleanValues<'a, 'p> {
    pub fn new(alg: &'a RegularOpenAlgebra<'p>) -> Self {
        BooleanValues {
            alg,
            memo: HashMap::new(),
        }
    }

    pub fn value(&mut self, kind: Atomic, sigma: &PName, tau: &PName) -> CondSet {
        let key = (kind, sigma.clone(), tau.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let alg = self.alg;
        let out = match kind {
            Atomic::In => {
                let parts: Vec<CondSet> = tau
                    .entries()
                    .iter()
                    .map(|(rho, r)| alg.meet(&self.value(Atomic::Eq, sigma, rho), &alg.embed(*r)))
                    .collect();
                alg.join_all(&parts)
            }
            Atomic::Eq => {
                let a = self.value(Atomic::Sub, sigma, tau);
                let b = self.value(Atomic::Sub, tau, sigma);
                alg.meet(&a, &b)
            }
            Atomic::Sub => {
                let mut acc = alg.one();
                for (rho, r) in sigma.entries() {
                    let inn = self.value(Atomic::In, rho, tau);
                    acc = alg.meet(&acc, &alg.join(&alg.neg(&alg.embed(*r)), &inn));
                }
                acc
            }
        };
        self.memo.insert(key, out.clone());
        out
    }

    /// `⟦σ ∈ C⟧ = ⋁_{⟨τ,r⟩∈C} (⟦σ = τ⟧ ∧ i(r))`
    pub fn class_value(&mut self, sigma: &PName, class: &ClassName) -> CondSet {
        let alg = self.alg;
        let parts: Vec<CondSet> = class
            .entries()
            .iter()
            .map(|(tau, r)| alg.meet(&self.value(Atomic::Eq, sigma, tau), &alg.embed(*r)))
            .collect();
        alg.join_all(&parts)
    }
}

/// For each atomic statement over `names`: `i(p) ≤ ⟦φ⟧ ⟺ p ⊩ φ`. Returns the
/// first failure as a description.
pub fn check_atomic_values(
    rel: &mut ForcingRelation<'_>,
    alg: &RegularOpenAlgebra<'_>,
    names: &[PName],
) -> core::result::Result<usize, String> {
    let p = rel.notion();
    let mut values = BooleanValues::new(alg);
    let mut checked = 0;
    for s in names {
        for t in names {
            for kind in [Atomic::In, Atomic::Eq, Atomic::Sub] {
                let v = values.value(kind, s, t);
                let forced = rel.atomic(kind, s, t);
                for q in 0..p.len() {
                    if alg.le(&alg.embed(q), &v) != forced.contains(q) {
                        return Err(format!("{kind:?} {s:?} {t:?} at condition {q}"));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// `λ(φ) = {p : p ⊩ φ}` is onto `RO(P)`: each element `U` is hit by
/// `⋁_{p∈U} p̌ ∈ Ġ`.
pub fn check_lambda_onto(rel: &mut ForcingRelation<'_>, alg: &RegularOpenAlgebra<'_>) -> Result<core::result::Result<(), String>> {
    for u in alg.elements() {
        let phi = Formula::or(u.ones().map(|q| Formula::in_g(Term::Name(cond_check(q)))).collect());
        let got = rel.forces(&phi)?;
        if got != *u {
            return Ok(Err(format!("{:?} is not the value of its disjunction", u.ones().collect::<Vec<_>>())));
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::{name_universe, UniverseMode, DEFAULT_NAME_BUDGET};

    #[test]
    fn fork_completion() {
        let p = ForcingNotion::fork();
        let alg = RegularOpenAlgebra::new(&p).unwrap();
        // Two generic filters, so four regular open sets.
        assert_eq!(alg.len(), 4);
        alg.check_boolean().unwrap();
        alg.check_dense_embedding().unwrap();
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u.clone()).unwrap();
        assert!(check_atomic_values(&mut rel, &alg, &u).unwrap() > 0);
        check_lambda_onto(&mut rel, &alg).unwrap().unwrap();
    }

    #[test]
    fn chain_is_trivial() {
        let p = ForcingNotion::chain(4);
        let alg = RegularOpenAlgebra::new(&p).unwrap();
        assert_eq!(alg.len(), 2);
        alg.check_boolean().unwrap();
    }
}
