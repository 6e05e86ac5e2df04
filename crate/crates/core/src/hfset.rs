//! Hereditarily finite sets.
//!
//! An [`HFSet`] is an immutable, reference-counted node whose children are kept
//! sorted and duplicate-free under the canonical order (rank first, then the
//! sorted children lexicographically). Two values are equal exactly when they
//! are extensionally equal; the cached hash and rank make the common unequal
//! case cheap and pointer equality short-circuits the common equal case.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::formula::{Formula, Term, Var};
use crate::stable_hash::mix;

/// Default bound on `n` for [`v_stage`]: `|V_5| = 65536`.
pub const DEFAULT_STAGE_CAP: usize = 5;

#[derive(Clone)]
pub struct HFSet(Arc<Node>);

struct Node {
    children: Vec<HFSet>,
    rank: u32,
    hash: u64,
}

impl HFSet {
    pub fn empty() -> Self {
        Self::from_sorted(Vec::new())
    }

    /// Builds the set with exactly the given (distinct) elements.
    pub fn make<I: IntoIterator<Item = HFSet>>(children: I) -> Self {
        let mut v: Vec<HFSet> = children.into_iter().collect();
        v.sort();
        v.dedup();
        Self::from_sorted(v)
    }

    /// `children` must already be strictly increasing.
    pub(crate) fn from_sorted(children: Vec<HFSet>) -> Self {
        debug_assert!(children.windows(2).all(|w| w[0] < w[1]));
        let rank = children.last().map_or(0, |c| c.rank() as u32 + 1);
        let mut hash = 0x5bd1_e995_u64 ^ children.len() as u64;
        for c in &children {
            hash = mix(hash ^ c.0.hash).wrapping_add(0x9e37_79b9_7f4a_7c15);
        }
        HFSet(Arc::new(Node {
            children,
            rank,
            hash,
        }))
    }

    pub fn singleton(x: HFSet) -> Self {
        Self::from_sorted(alloc::vec![x])
    }

    /// The unordered pair `{a, b}`.
    pub fn pair(a: HFSet, b: HFSet) -> Self {
        Self::make([a, b])
    }

    /// The Kuratowski pair `{{a}, {a, b}}`.
    pub fn kpair(a: HFSet, b: HFSet) -> Self {
        Self::pair(Self::singleton(a.clone()), Self::pair(a, b))
    }

    /// Inverse of [`HFSet::kpair`].
    pub fn as_kpair(&self) -> Option<(HFSet, HFSet)> {
        match self.children() {
            [s] => match s.children() {
                [a] => Some((a.clone(), a.clone())),
                _ => None,
            },
            [u, v] => {
                let (s, d) = if u.len() == 1 { (u, v) } else { (v, u) };
                let [a] = s.children() else { return None };
                let [x, y] = d.children() else { return None };
                if x == a {
                    Some((a.clone(), y.clone()))
                } else if y == a {
                    Some((a.clone(), x.clone()))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// The von Neumann natural `k`.
    pub fn nat(k: usize) -> Self {
        let mut elems: Vec<HFSet> = Vec::with_capacity(k);
        for _ in 0..k {
            let next = Self::from_sorted(elems.clone());
            elems.push(next);
        }
        Self::from_sorted(elems)
    }

    /// Returns `k` if `self` is the von Neumann natural `k`.
    pub fn as_nat(&self) -> Option<usize> {
        let cs = self.children();
        for (i, c) in cs.iter().enumerate() {
            if c.rank() != i || c.len() != i || c.children() != &cs[..i] {
                return None;
            }
        }
        Some(cs.len())
    }

    /// Ackermann's coding of naturals: `ack(n) = { ack(i) : bit i of n is set }`.
    /// Much flatter than the von Neumann encoding, which keeps formula codes small.
    pub fn ack(n: u64) -> Self {
        Self::make((0..64).filter(|i| n >> i & 1 == 1).map(|i| Self::ack(i as u64)))
    }

    pub fn as_ack(&self) -> Option<u64> {
        let mut n = 0u64;
        for c in self.children() {
            let i = c.as_ack()?;
            if i >= 64 {
                return None;
            }
            n |= 1 << i;
        }
        Some(n)
    }

    pub fn rank(&self) -> usize {
        self.0.rank as usize
    }

    pub fn children(&self) -> &[HFSet] {
        &self.0.children
    }

    pub fn len(&self) -> usize {
        self.0.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.children.is_empty()
    }

    pub fn contains(&self, x: &HFSet) -> bool {
        x.rank() < self.rank() && self.0.children.binary_search(x).is_ok()
    }

    pub fn is_subset(&self, other: &HFSet) -> bool {
        self.children().iter().all(|c| other.contains(c))
    }

    pub fn union(&self, other: &HFSet) -> HFSet {
        Self::make(self.children().iter().chain(other.children()).cloned())
    }

    pub fn ptr_eq(&self, other: &HFSet) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Cached structural hash; stable across runs.
    pub fn stable_hash(&self) -> u64 {
        self.0.hash
    }
}

impl PartialEq for HFSet {
    fn eq(&self, other: &Self) -> bool {
        // Equal sets built separately share no nodes; remembering the pairs
        // already proven equal keeps the walk linear in the DAG instead of
        // exponential in the rank.
        fn go(a: &HFSet, b: &HFSet, seen: &mut HashSet<(usize, usize)>) -> bool {
            if a.ptr_eq(b) {
                return true;
            }
            if a.0.hash != b.0.hash || a.0.rank != b.0.rank || a.len() != b.len() {
                return false;
            }
            let key = (Arc::as_ptr(&a.0) as usize, Arc::as_ptr(&b.0) as usize);
            if seen.contains(&key) {
                return true;
            }
            let same = a.children().iter().zip(b.children()).all(|(x, y)| go(x, y, seen));
            if same {
                seen.insert(key);
            }
            same
        }
        go(self, other, &mut HashSet::new())
    }
}

impl Eq for HFSet {}

impl Ord for HFSet {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        self.0
            .rank
            .cmp(&other.0.rank)
            .then_with(|| self.0.children.cmp(&other.0.children))
    }
}

impl PartialOrd for HFSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for HFSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.as_nat().filter(|&k| k > 0) {
            return write!(f, "{k}");
        }
        if self.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, c) in self.children().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c:?}")?;
        }
        f.write_str("}")
    }
}

/// `V_n`, all sets of rank `< n`, in canonical order.
pub fn v_stage(n: usize) -> Result<Vec<HFSet>> {
    v_stage_capped(n, DEFAULT_STAGE_CAP)
}

pub fn v_stage_capped(n: usize, cap: usize) -> Result<Vec<HFSet>> {
    if n > cap {
        return Err(Error::budget("cumulative stage", n as u64, cap as u64));
    }
    let mut stage: Vec<HFSet> = Vec::new();
    for _ in 0..n {
        let m = stage.len();
        if m >= usize::BITS as usize - 1 {
            return Err(Error::budget("cumulative stage", n as u64, cap as u64));
        }
        let mut next: Vec<HFSet> = (0..1usize << m)
            .map(|mask| {
                // `stage` is sorted, so picking in index order keeps children sorted.
                HFSet::from_sorted(
                    (0..m)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| stage[i].clone())
                        .collect(),
                )
            })
            .collect();
        next.sort();
        stage = next;
    }
    Ok(stage)
}

/// Smallest transitive set containing all of `roots` as elements, sorted.
pub fn transitive_closure<'a, I: IntoIterator<Item = &'a HFSet>>(roots: I) -> Vec<HFSet> {
    let mut seen: hashbrown::HashSet<HFSet> = hashbrown::HashSet::new();
    let mut stack: Vec<HFSet> = roots.into_iter().cloned().collect();
    while let Some(x) = stack.pop() {
        if seen.insert(x.clone()) {
            stack.extend(x.children().iter().cloned());
        }
    }
    let mut out: Vec<HFSet> = seen.into_iter().collect();
    out.sort();
    out
}

/// The definability formula θ_a(x): `∀z [z ∈ x ⟺ ⋁_{u∈a} θ_u(z)]`, with free
/// variable `x` and no constants.
pub fn theta_formula(a: &HFSet) -> Formula {
    Theta::default().on(a, Term::Var(Var::from("x")))
}

/// Builds θ-formulas with shared subformulas. Bound variables are named
/// `%z0`, `%z1`, ... by nesting depth, so they never clash with user variables.
#[derive(Debug, Default)]
pub struct Theta {
    cache: HashMap<(HFSet, usize), Formula>,
}

impl Theta {
    /// θ_a applied to an arbitrary term.
    pub fn on(&mut self, a: &HFSet, t: Term) -> Formula {
        self.build(a, t, 0)
    }

    fn bound(depth: usize) -> Var {
        Var::from(alloc::format!("%z{depth}").as_str())
    }

    fn build(&mut self, a: &HFSet, t: Term, depth: usize) -> Formula {
        let z = Self::bound(depth);
        let disj = Formula::or(
            a.children()
                .iter()
                .map(|u| self.inner(u, depth + 1))
                .collect(),
        );
        let zin = Formula::mem(Term::Var(z.clone()), t);
        Formula::forall(alloc::vec![z], Formula::iff(zin, disj))
    }

    /// θ_u(%z{depth-1}), cached because it does not depend on the outer term.
    fn inner(&mut self, u: &HFSet, depth: usize) -> Formula {
        if let Some(f) = self.cache.get(&(u.clone(), depth)) {
            return f.clone();
        }
        let f = self.build(u, Term::Var(Self::bound(depth - 1)), depth);
        self.cache.insert((u.clone(), depth), f.clone());
        f
    }
}

/// Groups `xs` by rank, mostly for diagnostics.
pub fn by_rank(xs: &[HFSet]) -> BTreeMap<usize, Vec<HFSet>> {
    let mut out: BTreeMap<usize, Vec<HFSet>> = BTreeMap::new();
    for x in xs {
        out.entry(x.rank()).or_default().push(x.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn e() -> HFSet {
        HFSet::empty()
    }

    #[test]
    fn make_canonicalizes() {
        assert_eq!(HFSet::make([]), e());
        assert_eq!(HFSet::make([e(), e()]), HFSet::singleton(e()));
        let two = HFSet::make([HFSet::singleton(e()), e()]);
        assert_eq!(two, HFSet::nat(2));
        assert_eq!(two.as_nat(), Some(2));
    }

    #[test]
    fn ranks() {
        assert_eq!(e().rank(), 0);
        assert_eq!(HFSet::singleton(e()).rank(), 1);
        assert_eq!(HFSet::make([HFSet::singleton(e()), e()]).rank(), 2);
    }

    #[test]
    fn stage_sizes() {
        assert!(v_stage(0).unwrap().is_empty());
        assert_eq!(v_stage(2).unwrap(), vec![e(), HFSet::singleton(e())]);
        // Brute force: iterate the powerset count 0 -> 1 -> 2 -> 4 -> 16.
        let mut count = 0u32;
        for _ in 0..4 {
            count = 1 << count;
        }
        assert_eq!(v_stage(4).unwrap().len(), count as usize);
        assert!(v_stage(6).is_err());
    }

    #[test]
    fn stage_is_rank_bounded_and_sorted() {
        let v4 = v_stage(4).unwrap();
        assert!(v4.iter().all(|x| x.rank() < 4));
        assert!(v4.windows(2).all(|w| w[0] < w[1]));
        for x in &v4 {
            assert_eq!(x.rank(), x.children().iter().map(|c| c.rank() + 1).max().unwrap_or(0));
        }
    }

    #[test]
    fn nat_round_trip() {
        for k in 0..30 {
            assert_eq!(HFSet::nat(k).as_nat(), Some(k));
        }
        assert_eq!(HFSet::singleton(HFSet::singleton(e())).as_nat(), None);
        assert_eq!(HFSet::pair(e(), HFSet::singleton(HFSet::singleton(e()))).as_nat(), None);
    }

    #[test]
    fn ack_round_trip() {
        for n in [0u64, 1, 2, 3, 7, 64, 255, 1 << 40, u64::MAX] {
            assert_eq!(HFSet::ack(n).as_ack(), Some(n));
        }
        let v4 = v_stage(4).unwrap();
        let mut codes: Vec<u64> = v4.iter().map(|x| x.as_ack().unwrap()).collect();
        codes.sort();
        assert_eq!(codes, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn kpair_round_trip() {
        let v3 = v_stage(3).unwrap();
        for a in &v3 {
            for b in &v3 {
                assert_eq!(HFSet::kpair(a.clone(), b.clone()).as_kpair(), Some((a.clone(), b.clone())));
            }
        }
        assert_eq!(HFSet::nat(2).as_kpair(), None);
        assert_eq!(e().as_kpair(), None);
    }

    #[test]
    fn order_is_total_and_consistent() {
        let v4 = v_stage(4).unwrap();
        for a in &v4 {
            for b in &v4 {
                assert_eq!(a == b, a.cmp(b) == Ordering::Equal);
                assert_eq!(a.cmp(b), b.cmp(a).reverse());
            }
        }
    }

    #[test]
    fn closure_is_transitive() {
        let x = HFSet::kpair(HFSet::nat(3), HFSet::ack(9));
        let tc = transitive_closure([&x]);
        for y in &tc {
            for c in y.children() {
                assert!(tc.contains(c));
            }
        }
        assert!(tc.contains(&x));
    }

    #[test]
    fn theta_ranks_grow() {
        let t0 = theta_formula(&e());
        let t1 = theta_formula(&HFSet::singleton(e()));
        assert!(t1.rank() > t0.rank());
        assert_eq!(t0.free_vars(), &[Var::from("x")]);
        assert!(t1.constants_free());
    }
}
