//! Parse trees for the finite-scale infinitary languages.
//!
//! One AST covers the truth language (ground constants), the forcing language
//! (name constants, `Ġ`) and the iterated-truth language (`T̂r` atoms).
//! Formulas are reference-counted, so translations can share subformulas and
//! build DAGs far smaller than the trees they denote.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::hfset::HFSet;
use crate::names::{op_name, PName};
use crate::stable_hash::hash_of;

pub type Var = Arc<str>;
pub type ClassId = Arc<str>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Var),
    Ground(HFSet),
    Name(PName),
    /// Ordered pair of two terms: the Kuratowski pair in the truth language,
    /// `op(σ, τ)` in the forcing language. Folded away once both sides are closed.
    Pair(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::from(name))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::Name(s), Term::Name(t)) => Term::Name(op_name(&s, &t)),
            (Term::Ground(x), Term::Ground(y)) => Term::Ground(HFSet::kpair(x, y)),
            (a, b) => Term::Pair(Box::new(a), Box::new(b)),
        }
    }

    pub fn first_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Ground(_) | Term::Name(_) => None,
            Term::Pair(a, b) => a.first_var().or_else(|| b.first_var()),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.first_var().is_none()
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Ground(_) | Term::Name(_) => {}
            Term::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn subst(&self, b: &BTreeMap<Var, Term>) -> Term {
        match self {
            Term::Var(v) => b.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Ground(_) | Term::Name(_) => self.clone(),
            Term::Pair(x, y) => Term::pair(x.subst(b), y.subst(b)),
        }
    }

    fn has_ground(&self) -> bool {
        match self {
            Term::Ground(_) => true,
            Term::Pair(a, b) => a.has_ground() || b.has_ground(),
            _ => false,
        }
    }

    fn has_name(&self) -> bool {
        match self {
            Term::Name(_) => true,
            Term::Pair(a, b) => a.has_name() || b.has_name(),
            _ => false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Kind {
    Eq(Term, Term),
    In(Term, Term),
    InClass(Term, ClassId),
    InG(Term),
    Tr(Term, Term, Term),
    Not(Formula),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(Vec<Var>, Formula),
    Exists(Vec<Var>, Formula),
}

#[derive(Clone)]
pub struct Formula(Arc<Node>);

struct Node {
    kind: Kind,
    rank: u32,
    free: Box<[Var]>,
    hash: u64,
}

impl Formula {
    pub fn new(kind: Kind) -> Formula {
        let mut free = BTreeSet::new();
        let rank = match &kind {
            Kind::Eq(a, b) | Kind::In(a, b) => {
                a.collect_vars(&mut free);
                b.collect_vars(&mut free);
                0
            }
            Kind::InClass(a, _) | Kind::InG(a) => {
                a.collect_vars(&mut free);
                0
            }
            Kind::Tr(a, b, c) => {
                a.collect_vars(&mut free);
                b.collect_vars(&mut free);
                c.collect_vars(&mut free);
                0
            }
            Kind::Not(f) => {
                free.extend(f.free_vars().iter().cloned());
                f.rank() as u32 + 1
            }
            Kind::And(fs) | Kind::Or(fs) => {
                for f in fs {
                    free.extend(f.free_vars().iter().cloned());
                }
                fs.iter().map(|f| f.rank() as u32).max().unwrap_or(0) + 1
            }
            Kind::Forall(vs, f) | Kind::Exists(vs, f) => {
                free.extend(f.free_vars().iter().filter(|v| !vs.contains(v)).cloned());
                f.rank() as u32 + 1
            }
        };
        let hash = hash_of(0x0f0f, &kind);
        Formula(Arc::new(Node {
            kind,
            rank,
            free: free.into_iter().collect(),
            hash,
        }))
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Self::new(Kind::Eq(a, b))
    }

    pub fn mem(a: Term, b: Term) -> Formula {
        Self::new(Kind::In(a, b))
    }

    pub fn in_class(a: Term, class: &str) -> Formula {
        Self::new(Kind::InClass(a, ClassId::from(class)))
    }

    pub fn in_g(a: Term) -> Formula {
        Self::new(Kind::InG(a))
    }

    pub fn tr(a: Term, b: Term, c: Term) -> Formula {
        Self::new(Kind::Tr(a, b, c))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Self::new(Kind::Not(f))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        Self::new(Kind::And(fs))
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        Self::new(Kind::Or(fs))
    }

    pub fn forall(vs: Vec<Var>, f: Formula) -> Formula {
        Self::new(Kind::Forall(vs, f))
    }

    pub fn exists(vs: Vec<Var>, f: Formula) -> Formula {
        Self::new(Kind::Exists(vs, f))
    }

    pub fn truth() -> Formula {
        Self::and(Vec::new())
    }

    pub fn falsity() -> Formula {
        Self::or(Vec::new())
    }

    /// `¬a ∨ b`
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Self::or(alloc::vec![Self::not(a), b])
    }

    /// `(¬a ∨ b) ∧ (¬b ∨ a)`
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Self::and(alloc::vec![
            Self::implies(a.clone(), b.clone()),
            Self::implies(b, a)
        ])
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn rank(&self) -> usize {
        self.0.rank as usize
    }

    /// Free variables, sorted.
    pub fn free_vars(&self) -> &[Var] {
        &self.0.free
    }

    pub fn is_closed(&self) -> bool {
        self.0.free.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self.kind(),
            Kind::Eq(..) | Kind::In(..) | Kind::InClass(..) | Kind::InG(_) | Kind::Tr(..)
        )
    }

    /// Stable address, used as a memo key while the formula is alive.
    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Immediate subformulas.
    pub fn children(&self) -> &[Formula] {
        match self.kind() {
            Kind::Not(f) | Kind::Forall(_, f) | Kind::Exists(_, f) => core::slice::from_ref(f),
            Kind::And(fs) | Kind::Or(fs) => fs,
            _ => &[],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self.kind() {
            Kind::Forall(..) | Kind::Exists(..) => false,
            _ => self.children().iter().all(Formula::is_quantifier_free),
        }
    }

    pub fn mentions_tr(&self) -> bool {
        match self.kind() {
            Kind::Tr(..) => true,
            _ => self.children().iter().any(Formula::mentions_tr),
        }
    }

    pub fn constants_free(&self) -> bool {
        let mut ok = true;
        self.visit_terms(&mut |t| ok &= !t.has_ground() && !t.has_name());
        ok
    }

    /// Ground and name constants are never mixed in one formula.
    pub fn constants_consistent(&self) -> bool {
        let (mut g, mut n) = (false, false);
        self.visit_terms(&mut |t| {
            g |= t.has_ground();
            n |= t.has_name();
        });
        !(g && n)
    }

    pub fn visit_terms(&self, f: &mut dyn FnMut(&Term)) {
        let mut seen = hashbrown::HashSet::new();
        self.visit_terms_inner(f, &mut seen);
    }

    fn visit_terms_inner(&self, f: &mut dyn FnMut(&Term), seen: &mut hashbrown::HashSet<usize>) {
        if !seen.insert(self.addr()) {
            return;
        }
        match self.kind() {
            Kind::Eq(a, b) | Kind::In(a, b) => {
                f(a);
                f(b);
            }
            Kind::InClass(a, _) | Kind::InG(a) => f(a),
            Kind::Tr(a, b, c) => {
                f(a);
                f(b);
                f(c);
            }
            _ => {
                for c in self.children() {
                    c.visit_terms_inner(f, seen);
                }
            }
        }
    }

    /// Every name constant occurring in the formula.
    pub fn names(&self) -> BTreeSet<PName> {
        fn go(t: &Term, out: &mut BTreeSet<PName>) {
            match t {
                Term::Name(n) => {
                    out.insert(n.clone());
                }
                Term::Pair(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| go(t, &mut out));
        out
    }

    fn bound_vars(&self, out: &mut BTreeSet<Var>) {
        if let Kind::Forall(vs, _) | Kind::Exists(vs, _) = self.kind() {
            out.extend(vs.iter().cloned());
        }
        for c in self.children() {
            c.bound_vars(out);
        }
    }

    /// Capture-free simultaneous substitution of closed terms.
    ///
    /// Refuses bindings for variables that are bound anywhere in the formula.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Term>) -> Result<Formula> {
        for t in bindings.values() {
            if let Some(v) = t.first_var() {
                return Err(Error::OpenTerm(v.clone()));
            }
        }
        let mut bound = BTreeSet::new();
        self.bound_vars(&mut bound);
        if let Some(v) = bindings.keys().find(|v| bound.contains(*v)) {
            return Err(Error::BoundVariable(v.clone()));
        }
        Ok(self.instantiate(bindings))
    }

    /// Substitution that respects shadowing: an inner quantifier rebinding a
    /// variable stops the substitution for that variable below it. Subtrees
    /// without affected free variables are shared, not copied.
    pub fn instantiate(&self, bindings: &BTreeMap<Var, Term>) -> Formula {
        if !self.free_vars().iter().any(|v| bindings.contains_key(v)) {
            return self.clone();
        }
        match self.kind() {
            Kind::Eq(a, b) => Self::eq(a.subst(bindings), b.subst(bindings)),
            Kind::In(a, b) => Self::mem(a.subst(bindings), b.subst(bindings)),
            Kind::InClass(a, c) => Self::new(Kind::InClass(a.subst(bindings), c.clone())),
            Kind::InG(a) => Self::in_g(a.subst(bindings)),
            Kind::Tr(a, b, c) => Self::tr(a.subst(bindings), b.subst(bindings), c.subst(bindings)),
            Kind::Not(f) => Self::not(f.instantiate(bindings)),
            Kind::And(fs) => Self::and(fs.iter().map(|f| f.instantiate(bindings)).collect()),
            Kind::Or(fs) => Self::or(fs.iter().map(|f| f.instantiate(bindings)).collect()),
            Kind::Forall(vs, f) | Kind::Exists(vs, f) => {
                let inner: BTreeMap<Var, Term> = bindings
                    .iter()
                    .filter(|(v, _)| !vs.contains(v))
                    .map(|(v, t)| (v.clone(), t.clone()))
                    .collect();
                let body = f.instantiate(&inner);
                match self.kind() {
                    Kind::Forall(..) => Self::forall(vs.clone(), body),
                    _ => Self::exists(vs.clone(), body),
                }
            }
        }
    }

    /// Instantiates with the given terms in the order of `free_vars()`.
    pub fn apply(&self, terms: &[Term]) -> Formula {
        let b: BTreeMap<Var, Term> = self
            .free_vars()
            .iter()
            .cloned()
            .zip(terms.iter().cloned())
            .collect();
        self.instantiate(&b)
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Formula {}

impl Ord for Formula {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            Ordering::Equal
        } else {
            self.0.kind.cmp(&other.0.kind)
        }
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind().fmt(f)
    }
}

/// Closes `pool` under immediate subformulas; output sorted by rank, then canonically.
pub fn subformula_closure<'a, I: IntoIterator<Item = &'a Formula>>(pool: I) -> Vec<Formula> {
    let mut seen: BTreeSet<Formula> = BTreeSet::new();
    let mut stack: Vec<Formula> = pool.into_iter().cloned().collect();
    while let Some(f) = stack.pop() {
        if seen.insert(f.clone()) {
            stack.extend(f.children().iter().cloned());
        }
    }
    let mut out: Vec<Formula> = seen.into_iter().collect();
    out.sort_by(|a, b| a.rank().cmp(&b.rank()).then_with(|| a.cmp(b)));
    out
}

pub fn is_subformula_closed(pool: &[Formula]) -> bool {
    let set: BTreeSet<&Formula> = pool.iter().collect();
    pool.iter().all(|f| f.children().iter().all(|c| set.contains(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn x() -> Term {
        Term::var("x")
    }
    fn y() -> Term {
        Term::var("y")
    }

    #[test]
    fn ranks() {
        let a = Formula::eq(x(), y());
        assert_eq!(a.rank(), 0);
        assert_eq!(Formula::not(a.clone()).rank(), 1);
        let c = Formula::and(vec![a.clone(), Formula::not(Formula::mem(x(), y()))]);
        assert_eq!(c.rank(), 2);
    }

    #[test]
    fn free_variables() {
        let f = Formula::forall(vec![Var::from("x")], Formula::eq(x(), y()));
        assert_eq!(f.free_vars(), &[Var::from("y")]);
        assert!(Formula::truth().is_closed());
    }

    #[test]
    fn substitution() {
        let e = Term::Ground(HFSet::empty());
        let b: BTreeMap<Var, Term> = [(Var::from("x"), e.clone())].into_iter().collect();
        assert_eq!(
            Formula::mem(x(), y()).substitute(&b).unwrap(),
            Formula::mem(e.clone(), y())
        );
        let by: BTreeMap<Var, Term> = [(Var::from("y"), e.clone())].into_iter().collect();
        let f = Formula::forall(vec![Var::from("x")], Formula::eq(x(), y()));
        assert_eq!(
            f.substitute(&by).unwrap(),
            Formula::forall(vec![Var::from("x")], Formula::eq(x(), e.clone()))
        );
        assert_eq!(f.substitute(&b), Err(Error::BoundVariable(Var::from("x"))));
        let open: BTreeMap<Var, Term> = [(Var::from("y"), x())].into_iter().collect();
        assert!(matches!(f.substitute(&open), Err(Error::OpenTerm(_))));
    }

    #[test]
    fn substitution_keeps_rank_and_shares() {
        let inner = Formula::not(Formula::eq(y(), y()));
        let f = Formula::and(vec![Formula::mem(x(), x()), inner.clone()]);
        let b: BTreeMap<Var, Term> = [(Var::from("x"), Term::Ground(HFSet::nat(1)))].into_iter().collect();
        let g = f.substitute(&b).unwrap();
        assert_eq!(g.rank(), f.rank());
        assert!(g.children()[1].ptr_eq(&inner));
    }

    #[test]
    fn closure() {
        let f = Formula::not(Formula::and(vec![Formula::eq(x(), y()), Formula::truth()]));
        let pool = subformula_closure([&f]);
        assert_eq!(pool.len(), 4);
        assert!(is_subformula_closed(&pool));
        assert!(!is_subformula_closed(&[f]));
    }

    #[test]
    fn pair_terms_fold() {
        let t = Term::pair(Term::Ground(HFSet::empty()), Term::Ground(HFSet::nat(1)));
        assert_eq!(t, Term::Ground(HFSet::kpair(HFSet::empty(), HFSet::nat(1))));
        assert!(matches!(Term::pair(x(), Term::Ground(HFSet::empty())), Term::Pair(..)));
    }
}
