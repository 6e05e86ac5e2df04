use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;
use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::etr::{etr_solve, RecursionInstance};
use crate::formula::{ClassId, Formula, Kind, Term, Var};
use crate::hfset::HFSet;
use crate::names::{g_dot, is_subname_closed, ClassName, PName};
use crate::poset::{CondSet, ForcingNotion, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atomic {
    In,
    Eq,
    Sub,
}

/// The forcing relation of a notion, computed on demand and memoized.
///
/// Atomic statements may mention any names. Formulas with quantifiers need
/// a name universe, which the quantifiers range over; their constants must
/// then lie in it.
pub struct ForcingRelation<'p> {
    notion: &'p ForcingNotion,
    universe: Option<Vec<PName>>,
    uindex: HashMap<PName, usize>,
    classes: BTreeMap<ClassId, ClassName>,
    atomic: HashMap<(Atomic, PName, PName), CondSet>,
    formulas: HashMap<Formula, CondSet>,
}

impl fmt::Debug for ForcingRelation<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForcingRelation")
            .field("conditions", &self.notion.len())
            .field("universe", &self.universe.as_ref().map(Vec::len))
            .field("atomic", &self.atomic.len())
            .field("formulas", &self.formulas.len())
            .finish()
    }
}

impl<'p> ForcingRelation<'p> {
    /// A relation for quantifier-free sentences only.
    pub fn new(notion: &'p ForcingNotion) -> Self {
        let mut classes = BTreeMap::new();
        let g = g_dot(notion);
        classes.insert(g.id.clone(), g);
        ForcingRelation {
            notion,
            universe: None,
            uindex: HashMap::new(),
            classes,
            atomic: HashMap::new(),
            formulas: HashMap::new(),
        }
    }

    /// A relation whose quantifiers range over `universe`, which must be
    /// closed under subnames.
    pub fn with_universe(notion: &'p ForcingNotion, universe: Vec<PName>) -> Result<Self> {
        if !is_subname_closed(&universe) {
            return Err(Error::NotSubnameClosed);
        }
        let mut rel = Self::new(notion);
        rel.uindex = universe.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        rel.universe = Some(universe);
        Ok(rel)
    }

    /// Registers a class name; `G` is always present.
    pub fn add_class(&mut self, class: ClassName) {
        self.formulas.clear();
        self.classes.insert(class.id.clone(), class);
    }

    pub fn class(&self, id: &str) -> Option<&ClassName> {
        self.classes.get(id)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassName> {
        self.classes.values()
    }

    pub fn notion(&self) -> &'p ForcingNotion {
        self.notion
    }

    pub fn universe(&self) -> &[PName] {
        self.universe.as_deref().unwrap_or(&[])
    }

    pub fn universe_index(&self, n: &PName) -> Option<usize> {
        self.uindex.get(n).copied()
    }

    /// Conditions forcing the atomic statement `σ ∈ τ`, `σ = τ` or `σ ⊆ τ`.
    pub fn atomic(&mut self, kind: Atomic, sigma: &PName, tau: &PName) -> CondSet {
        let key = (kind, sigma.clone(), tau.clone());
        if let Some(s) = self.atomic.get(&key) {
            return s.clone();
        }
        let p = self.notion;
        let out = match kind {
            Atomic::In => {
                let mut d = p.empty_set();
                for (rho, r) in tau.entries() {
                    let mut s = self.atomic(Atomic::Eq, sigma, rho);
                    s.intersect_with(p.below(*r));
                    d.union_with(&s);
                }
                p.dense_below_set(&d)
            }
            Atomic::Sub => {
                let mut out = p.full_set();
                for (rho, r) in sigma.entries() {
                    let inn = self.atomic(Atomic::In, rho, tau);
                    out.intersect_with(&sub_clause(p, &inn, *r));
                }
                out
            }
            Atomic::Eq => {
                let mut s = self.atomic(Atomic::Sub, sigma, tau);
                s.intersect_with(&self.atomic(Atomic::Sub, tau, sigma));
                s
            }
        };
        self.atomic.insert(key, out.clone());
        out
    }

    /// Overrides a memoized atomic entry. Only meant for mutation tests of
    /// the audit.
    pub fn override_atomic(&mut self, kind: Atomic, sigma: &PName, tau: &PName, value: CondSet) {
        self.atomic.insert((kind, sigma.clone(), tau.clone()), value);
        self.formulas.clear();
    }

    fn class_clause(&mut self, sigma: &PName, class: &ClassName) -> CondSet {
        let p = self.notion;
        let mut d = p.empty_set();
        for (tau, r) in class.entries() {
            let mut s = self.atomic(Atomic::Eq, sigma, tau);
            s.intersect_with(p.below(*r));
            d.union_with(&s);
        }
        p.dense_below_set(&d)
    }

    fn name_of(&self, t: &Term) -> Result<PName> {
        match t {
            Term::Name(n) => Ok(n.clone()),
            Term::Var(v) => Err(Error::UnboundVariable(v.clone())),
            Term::Ground(_) => Err(Error::Unsupported("ground constants in the forcing language")),
            Term::Pair(a, b) => {
                let (a, b) = (self.name_of(a)?, self.name_of(b)?);
                Ok(crate::names::op_name(&a, &b))
            }
        }
    }

    /// `¬S`: the conditions with no extension in `S`.
    pub fn negate(&self, s: &CondSet) -> CondSet {
        let mut c = s.clone();
        c.toggle_range(..);
        self.notion.interior(&c)
    }

    /// Disjunction as `¬⋀¬`.
    pub fn disjoin<'a, I: IntoIterator<Item = &'a CondSet>>(&self, sets: I) -> CondSet {
        let mut all = self.notion.full_set();
        for s in sets {
            all.intersect_with(&self.negate(s));
        }
        self.negate(&all)
    }

    /// The set of conditions forcing the sentence `phi`.
    pub fn forces(&mut self, phi: &Formula) -> Result<CondSet> {
        if let Some(v) = phi.free_vars().first() {
            return Err(Error::UnboundVariable(v.clone()));
        }
        if self.universe.is_some() && !phi.is_quantifier_free() && phi.names().iter().any(|n| !self.uindex.contains_key(n)) {
            return Err(Error::NameOutsideUniverse);
        }
        self.forces_inner(phi)
    }

    pub fn forces_at(&mut self, p: usize, phi: &Formula) -> Result<bool> {
        Ok(self.forces(phi)?.contains(p))
    }

    fn forces_inner(&mut self, phi: &Formula) -> Result<CondSet> {
        if let Some(s) = self.formulas.get(phi) {
            return Ok(s.clone());
        }
        let out = match phi.kind() {
            Kind::Eq(a, b) => {
                let (a, b) = (self.name_of(a)?, self.name_of(b)?);
                self.atomic(Atomic::Eq, &a, &b)
            }
            Kind::In(a, b) => {
                let (a, b) = (self.name_of(a)?, self.name_of(b)?);
                self.atomic(Atomic::In, &a, &b)
            }
            Kind::InClass(a, c) => {
                let a = self.name_of(a)?;
                let class = self.classes.get(c).cloned().ok_or_else(|| Error::UnknownClass(c.to_string()))?;
                self.class_clause(&a, &class)
            }
            Kind::InG(a) => {
                let a = self.name_of(a)?;
                let class = self.classes["G"].clone();
                self.class_clause(&a, &class)
            }
            Kind::Tr(..) => return Err(Error::Unsupported("truth atoms in the forcing language")),
            Kind::Not(g) => {
                let s = self.forces_inner(g)?;
                self.negate(&s)
            }
            Kind::And(gs) => {
                let mut out = self.notion.full_set();
                for g in gs {
                    out.intersect_with(&self.forces_inner(g)?);
                }
                out
            }
            Kind::Or(gs) => {
                let sets: Vec<CondSet> = gs.iter().map(|g| self.forces_inner(g)).collect::<Result<_>>()?;
                self.disjoin(&sets)
            }
            Kind::Forall(vs, g) => self.forall(vs, g)?,
            Kind::Exists(vs, g) => {
                let s = self.forall_negated(vs, g)?;
                self.negate(&s)
            }
        };
        self.formulas.insert(phi.clone(), out.clone());
        Ok(out)
    }

    fn instances(&self, vs: &[Var], g: &Formula) -> Result<Vec<Formula>> {
        let universe = self
            .universe
            .as_ref()
            .ok_or(Error::Unsupported("quantifiers without a name universe"))?;
        let n = universe.len();
        let k = vs.len() as u32;
        let total = n.checked_pow(k).filter(|&t| t <= 1 << 22).ok_or(Error::budget(
            "quantifier instances",
            (n as u128).saturating_pow(k),
            1u64 << 22,
        ))?;
        let mut out = Vec::with_capacity(total);
        for c in 0..total {
            let mut c = c;
            let mut b = BTreeMap::new();
            for v in vs.iter().rev() {
                b.entry(v.clone()).or_insert_with(|| Term::Name(universe[c % n].clone()));
                c /= n;
            }
            out.push(g.instantiate(&b));
        }
        Ok(out)
    }

    fn forall(&mut self, vs: &[Var], g: &Formula) -> Result<CondSet> {
        let mut out = self.notion.full_set();
        for inst in self.instances(vs, g)? {
            out.intersect_with(&self.forces_inner(&inst)?);
            if out.is_clear() {
                break;
            }
        }
        Ok(out)
    }

    /// `⊩ ∀x̄ ¬g`, the body of the existential abbreviation.
    fn forall_negated(&mut self, vs: &[Var], g: &Formula) -> Result<CondSet> {
        let mut out = self.notion.full_set();
        for inst in self.instances(vs, g)? {
            let s = self.forces_inner(&inst)?;
            out.intersect_with(&self.negate(&s));
            if out.is_clear() {
                break;
            }
        }
        Ok(out)
    }

    /// Stage keys of the staged fill: `(max rank, rank σ, rank τ)`.
    fn stage_keys(&self) -> Result<Vec<(usize, usize, usize)>> {
        let universe = self
            .universe
            .as_ref()
            .ok_or(Error::Unsupported("staged computation without a name universe"))?;
        let ranks: Vec<usize> = universe.iter().map(PName::rank).collect();
        let mut keys: Vec<(usize, usize, usize)> = Vec::new();
        for &a in &ranks {
            for &b in &ranks {
                keys.push((a.max(b), a, b));
            }
        }
        keys.sort();
        keys.dedup();
        Ok(keys)
    }

    /// Computes every `σ ∈ τ` and `σ = τ` over the universe, stage by stage in
    /// the order of [`ForcingRelation::stage_keys`].
    pub fn fill(&mut self) -> Result<()> {
        let keys = self.stage_keys()?;
        let universe = self.universe().to_vec();
        for key in keys {
            for s in &universe {
                for t in &universe {
                    if (s.rank().max(t.rank()), s.rank(), t.rank()) == key {
                        self.atomic(Atomic::In, s, t);
                        self.atomic(Atomic::Eq, s, t);
                    }
                }
            }
        }
        Ok(())
    }

    /// The atomic part of the relation over the universe as a transfinite
    /// recursion: one stage per key, entries `(kind, σ, τ, p)`. Returns the
    /// solution as sets indexed `[kind][σ][τ]` (kind 0 is `∈`, 1 is `=`).
    pub fn atomic_by_etr(&self) -> Result<Vec<Vec<Vec<CondSet>>>> {
        let keys = self.stage_keys()?;
        let universe = self.universe();
        let n = universe.len();
        let np = self.notion.len();
        let p = self.notion;
        let idx = &self.uindex;
        let key_of = |i: usize, j: usize| {
            let (a, b) = (universe[i].rank(), universe[j].rank());
            keys.binary_search(&(a.max(b), a, b)).unwrap()
        };
        let flat = |kind: usize, i: usize, j: usize, q: usize| ((kind * n + i) * n + j) * np + q;
        let size = 2 * n * n * np;
        let domain: Vec<HFSet> = (0..size).map(|e| HFSet::ack(e as u64)).collect();
        let eq_set = |view: &crate::etr::SliceView<'_>, i: usize, j: usize| -> Result<CondSet> {
            let stage = key_of(i, j);
            let mut s = p.empty_set();
            for q in 0..np {
                if view.contains(stage, flat(1, i, j, q))? {
                    s.insert(q);
                }
            }
            Ok(s)
        };
        let in_set = |view: &crate::etr::SliceView<'_>, i: usize, j: usize| -> Result<CondSet> {
            let mut d = p.empty_set();
            for (rho, r) in universe[j].entries() {
                let mut s = eq_set(view, i, idx[rho])?;
                s.intersect_with(p.below(*r));
                d.union_with(&s);
            }
            Ok(p.dense_below_set(&d))
        };
        let inst = RecursionInstance::callable(keys.len(), domain, |e, _, view| {
            let q = e % np;
            let j = (e / np) % n;
            let i = (e / np / n) % n;
            let kind = e / np / n / n;
            if key_of(i, j) != view.stage() {
                return Ok(false);
            }
            let set = if kind == 0 {
                in_set(view, i, j)?
            } else {
                let mut s = p.full_set();
                for (a, b) in [(i, j), (j, i)] {
                    for (rho, r) in universe[a].entries() {
                        let inn = in_set(view, idx[rho], b)?;
                        s.intersect_with(&sub_clause(p, &inn, *r));
                    }
                }
                s
            };
            Ok(set.contains(q))
        });
        let sol = etr_solve(&inst)?;
        let mut all = FixedBitSet::with_capacity(size);
        for s in &sol.slices {
            all.union_with(s);
        }
        let mut out = alloc::vec![alloc::vec![alloc::vec![p.empty_set(); n]; n]; 2];
        for e in all.ones() {
            let q = e % np;
            let j = (e / np) % n;
            let i = (e / np / n) % n;
            let kind = e / np / n / n;
            out[kind][i][j].insert(q);
        }
        Ok(out)
    }

    /// Whether [`ForcingRelation::atomic_by_etr`] reproduces the memoized
    /// atomic relation bit for bit.
    pub fn atomic_matches_etr(&mut self) -> Result<bool> {
        let etr = self.atomic_by_etr()?;
        let universe = self.universe().to_vec();
        for (i, s) in universe.iter().enumerate() {
            for (j, t) in universe.iter().enumerate() {
                if self.atomic(Atomic::In, s, t) != etr[0][i][j] || self.atomic(Atomic::Eq, s, t) != etr[1][i][j] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `{p : every q ≤ p, r has an extension in In}`, one entry of the `⊆` clause.
fn sub_clause(p: &ForcingNotion, inn: &CondSet, r: usize) -> CondSet {
    let mut u = p.up_closure(inn);
    let mut not_below = p.below(r).clone();
    not_below.toggle_range(..);
    u.union_with(&not_below);
    p.interior(&u)
}

/// Brute-force reading of the atomic clauses straight from the definitions,
/// condition by condition; used as an oracle in tests.
pub fn atomic_by_definition(p: &ForcingNotion, kind: Atomic, sigma: &PName, tau: &PName, at: usize) -> bool {
    let below = |q: usize| p.below(q).ones().collect::<Vec<_>>();
    match kind {
        Atomic::In => below(at).into_iter().all(|q| {
            below(q).into_iter().any(|q2| {
                tau.entries()
                    .iter()
                    .any(|(rho, r)| p.le(q2, *r) && atomic_by_definition(p, Atomic::Eq, sigma, rho, q2))
            })
        }),
        Atomic::Sub => sigma.entries().iter().all(|(rho, r)| {
            below(at)
                .into_iter()
                .filter(|&q1| p.le(q1, *r))
                .all(|q1| below(q1).into_iter().any(|q| atomic_by_definition(p, Atomic::In, rho, tau, q)))
        }),
        Atomic::Eq => {
            atomic_by_definition(p, Atomic::Sub, sigma, tau, at) && atomic_by_definition(p, Atomic::Sub, tau, sigma, at)
        }
    }
}

/// `1 ⊩ φ`
pub fn forced_by_one(rel: &mut ForcingRelation<'_>, phi: &Formula) -> Result<bool> {
    rel.forces_at(ONE, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::{check_name, name_universe, UniverseMode, DEFAULT_NAME_BUDGET};
    use alloc::vec;

    fn setups() -> Vec<ForcingNotion> {
        vec![ForcingNotion::trivial(), ForcingNotion::chain(3), ForcingNotion::fork(), ForcingNotion::antichain(2)]
    }

    #[test]
    fn memo_matches_definition() {
        for p in setups() {
            let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
            let mut rel = ForcingRelation::with_universe(&p, u.clone()).unwrap();
            for s in &u {
                for t in &u {
                    for kind in [Atomic::In, Atomic::Eq, Atomic::Sub] {
                        let set = rel.atomic(kind, s, t);
                        for q in 0..p.len() {
                            assert_eq!(set.contains(q), atomic_by_definition(&p, kind, s, t, q));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn staged_and_etr_agree() {
        for p in setups() {
            let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
            let mut rel = ForcingRelation::with_universe(&p, u).unwrap();
            rel.fill().unwrap();
            assert!(rel.atomic_matches_etr().unwrap());
        }
    }

    #[test]
    fn checks_are_decided() {
        let p = ForcingNotion::fork();
        let mut rel = ForcingRelation::new(&p);
        for a in crate::hfset::v_stage(3).unwrap() {
            for b in crate::hfset::v_stage(3).unwrap() {
                let s = rel.atomic(Atomic::In, &check_name(&a), &check_name(&b));
                if b.contains(&a) {
                    assert_eq!(s, p.full_set());
                } else {
                    assert!(s.is_clear());
                }
            }
        }
    }

    #[test]
    fn generic_filter_is_forced_into_g() {
        let p = ForcingNotion::fork();
        let mut rel = ForcingRelation::new(&p);
        for g in p.generic_filters() {
            for q in 0..p.len() {
                let phi = Formula::in_g(Term::Name(crate::names::cond_check(q)));
                let s = rel.forces(&phi).unwrap();
                assert_eq!(g.contains(q), g.members().any(|r| s.contains(r)));
            }
        }
    }

    #[test]
    fn quantifiers_need_a_universe() {
        let p = ForcingNotion::trivial();
        let mut rel = ForcingRelation::new(&p);
        let f = Formula::forall(vec![Var::from("x")], Formula::eq(Term::var("x"), Term::var("x")));
        assert!(matches!(rel.forces(&f), Err(Error::Unsupported(_))));
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u).unwrap();
        assert!(forced_by_one(&mut rel, &f).unwrap());
        let outside = check_name(&HFSet::nat(3));
        let g = Formula::forall(vec![Var::from("x")], Formula::mem(Term::var("x"), Term::Name(outside)));
        assert_eq!(rel.forces(&g), Err(Error::NameOutsideUniverse));
        assert!(matches!(ForcingRelation::with_universe(&p, vec![check_name(&HFSet::nat(1))]), Err(Error::NotSubnameClosed)));
    }
}
