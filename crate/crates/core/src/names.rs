//! P-names and class names over finite forcing notions.
//!
//! Names carry condition *indices*; they do not hold on to their notion.
//! Condition `0` is always the top element `1`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::formula::ClassId;
use crate::hfset::HFSet;
use crate::poset::{Filter, ForcingNotion, ONE};
use crate::stable_hash::mix;

/// Default cap on the size of generated name universes.
pub const DEFAULT_NAME_BUDGET: usize = 20_000;

#[derive(Clone)]
pub struct PName(Arc<Node>);

struct Node {
    entries: Vec<(PName, usize)>,
    rank: u32,
    hash: u64,
}

impl PName {
    pub fn empty() -> PName {
        Self::from_sorted(Vec::new())
    }

    pub fn new<I: IntoIterator<Item = (PName, usize)>>(entries: I) -> PName {
        let mut v: Vec<(PName, usize)> = entries.into_iter().collect();
        v.sort();
        v.dedup();
        Self::from_sorted(v)
    }

    fn from_sorted(entries: Vec<(PName, usize)>) -> PName {
        let rank = entries.iter().map(|(n, _)| n.0.rank + 1).max().unwrap_or(0);
        let mut hash = 0x243f_6a88_85a3_08d3_u64 ^ entries.len() as u64;
        for (n, p) in &entries {
            hash = mix(hash ^ n.0.hash ^ (*p as u64).rotate_left(32)).wrapping_add(0x9e37_79b9_7f4a_7c15);
        }
        PName(Arc::new(Node {
            entries,
            rank,
            hash,
        }))
    }

    pub fn entries(&self) -> &[(PName, usize)] {
        &self.0.entries
    }

    pub fn rank(&self) -> usize {
        self.0.rank as usize
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn ptr_eq(&self, other: &PName) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// `self ∪ {⟨σ, p⟩}`
    pub fn with_entry(&self, sigma: PName, p: usize) -> PName {
        Self::new(self.entries().iter().cloned().chain([(sigma, p)]))
    }
}

impl PartialEq for PName {
    fn eq(&self, other: &Self) -> bool {
        // Same memoized walk as for sets: separately built check names of
        // large naturals are otherwise compared in exponential time.
        fn go(a: &PName, b: &PName, seen: &mut hashbrown::HashSet<(usize, usize)>) -> bool {
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
            let same = a
                .entries()
                .iter()
                .zip(b.entries())
                .all(|((x, p), (y, q))| p == q && go(x, y, seen));
            if same {
                seen.insert(key);
            }
            same
        }
        go(self, other, &mut hashbrown::HashSet::new())
    }
}

impl Eq for PName {}

impl Ord for PName {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        self.0
            .rank
            .cmp(&other.0.rank)
            .then_with(|| self.0.entries.cmp(&other.0.entries))
    }
}

impl PartialOrd for PName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for PName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for PName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, p)) in self.entries().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "<{n:?},{p}>")?;
        }
        f.write_str("}")
    }
}

/// A name used only as a predicate symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClassName {
    pub id: ClassId,
    entries: Vec<(PName, usize)>,
}

impl ClassName {
    pub fn new<I: IntoIterator<Item = (PName, usize)>>(id: &str, entries: I) -> ClassName {
        let mut v: Vec<(PName, usize)> = entries.into_iter().collect();
        v.sort();
        v.dedup();
        ClassName {
            id: ClassId::from(id),
            entries: v,
        }
    }

    pub fn entries(&self) -> &[(PName, usize)] {
        &self.entries
    }

    pub fn as_name(&self) -> PName {
        PName::from_sorted(self.entries.clone())
    }
}

/// x̌ = {⟨y̌, 1⟩ : y ∈ x}
pub fn check_name(x: &HFSet) -> PName {
    CheckNames::default().get(x)
}

/// Memoized check names; HF sets are DAGs and naive recursion revisits shared parts.
#[derive(Debug, Default)]
pub struct CheckNames {
    memo: HashMap<HFSet, PName>,
}

impl CheckNames {
    pub fn get(&mut self, x: &HFSet) -> PName {
        if let Some(n) = self.memo.get(x) {
            return n.clone();
        }
        let n = PName::new(x.children().iter().map(|y| (self.get(y), ONE)).collect::<Vec<_>>());
        self.memo.insert(x.clone(), n.clone());
        n
    }
}

/// Check name of the natural coding condition `p`.
pub fn cond_check(p: usize) -> PName {
    check_name(&HFSet::nat(p))
}

/// op(σ,τ) = {⟨{⟨σ,1⟩},1⟩, ⟨{⟨σ,1⟩,⟨τ,1⟩},1⟩}
pub fn op_name(sigma: &PName, tau: &PName) -> PName {
    let s = PName::new([(sigma.clone(), ONE)]);
    let d = PName::new([(sigma.clone(), ONE), (tau.clone(), ONE)]);
    PName::new([(s, ONE), (d, ONE)])
}

/// Ġ = {⟨p̌, p⟩ : p ∈ P}, with conditions coded as von Neumann naturals.
pub fn g_dot(p: &ForcingNotion) -> ClassName {
    let mut checks = CheckNames::default();
    ClassName::new("G", (0..p.len()).map(|q| (checks.get(&HFSet::nat(q)), q)).collect::<Vec<_>>())
}

/// ε̇ = {⟨op(ǐ, ǰ), e_{i,j}⟩}, over the tokens the notion actually has.
pub fn eps_dot(p: &ForcingNotion) -> Result<PName> {
    let c = p.collapse().ok_or(Error::NotCollapse)?;
    let mut checks = CheckNames::default();
    Ok(PName::new(
        c.sup_in
            .iter()
            .map(|(&(i, j), &q)| {
                let ci = checks.get(&HFSet::nat(i));
                let cj = checks.get(&HFSet::nat(j));
                (op_name(&ci, &cj), q)
            })
            .collect::<Vec<_>>(),
    ))
}

/// Ȧ = {⟨ǐ, a_i⟩}, as the class `A`.
pub fn a_dot(p: &ForcingNotion) -> Result<ClassName> {
    let c = p.collapse().ok_or(Error::NotCollapse)?;
    Ok(ClassName::new(
        "A",
        c.sup_a.iter().map(|(&i, &q)| (cond_check(i), q)).collect::<Vec<_>>(),
    ))
}

/// ṅ_a = {⟨ǩ, (n↦a)⟩ : k < n < clock}, the name of the number mapped to `a`.
pub fn n_dot(p: &ForcingNotion, a: &HFSet) -> Result<PName> {
    let c = p.collapse().ok_or(Error::NotCollapse)?;
    let t = c
        .targets
        .binary_search(a)
        .map_err(|_| Error::Invalid(alloc::format!("{a:?} is not in the collapsed stage")))?;
    let mut checks = CheckNames::default();
    let mut entries = Vec::new();
    for n in 0..c.clock() {
        let q = c.singleton(n, t);
        for k in 0..n {
            entries.push((checks.get(&HFSet::nat(k)), q));
        }
    }
    Ok(PName::new(entries))
}

/// Closure of `seeds` under taking entry names, sorted.
pub fn subname_closure<'a, I: IntoIterator<Item = &'a PName>>(seeds: I) -> Vec<PName> {
    let mut seen: hashbrown::HashSet<PName> = hashbrown::HashSet::new();
    let mut stack: Vec<PName> = seeds.into_iter().cloned().collect();
    while let Some(n) = stack.pop() {
        if seen.insert(n.clone()) {
            stack.extend(n.entries().iter().map(|(m, _)| m.clone()));
        }
    }
    let mut out: Vec<PName> = seen.into_iter().collect();
    out.sort();
    out
}

pub fn is_subname_closed(names: &[PName]) -> bool {
    let set: hashbrown::HashSet<&PName> = names.iter().collect();
    names
        .iter()
        .all(|n| n.entries().iter().all(|(m, _)| set.contains(m)))
}

#[derive(Debug, Clone)]
pub enum UniverseMode<'a> {
    /// All names of rank ≤ ρ.
    Exhaustive(usize),
    /// Subname closure of the given names.
    Seeded(&'a [PName]),
}

/// A subname-closed name universe, sorted canonically.
pub fn name_universe(p: &ForcingNotion, mode: UniverseMode<'_>, budget: usize) -> Result<Vec<PName>> {
    match mode {
        UniverseMode::Seeded(seeds) => {
            let out = subname_closure(seeds);
            if out.len() > budget {
                return Err(Error::budget("name universe", out.len() as u64, budget as u64));
            }
            Ok(out)
        }
        UniverseMode::Exhaustive(rho) => {
            if rho > 2 {
                return Err(Error::Invalid("exhaustive name universes need rank ≤ 2".into()));
            }
            let mut level = alloc::vec![PName::empty()];
            for _ in 0..rho {
                let pairs: Vec<(PName, usize)> = level
                    .iter()
                    .flat_map(|n| (0..p.len()).map(move |q| (n.clone(), q)))
                    .collect();
                let bits = pairs.len() as u32;
                if bits >= 63 || (1u64 << bits) > budget as u64 {
                    return Err(Error::budget(
                        "name universe",
                        1u128 << bits.min(127),
                        budget as u64,
                    ));
                }
                level = (0..1u64 << bits)
                    .map(|mask| {
                        PName::new(
                            pairs
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| mask >> i & 1 == 1)
                                .map(|(_, e)| e.clone())
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                level.sort();
            }
            Ok(level)
        }
    }
}

/// Direct evaluation: eval(σ,G) = {eval(ρ,G) : ⟨ρ,r⟩ ∈ σ, r ∈ G}.
pub fn eval_name(sigma: &PName, g: &Filter) -> HFSet {
    Evaluator::new(g).eval(sigma)
}

pub fn eval_class(class: &ClassName, g: &Filter) -> BTreeSet<HFSet> {
    let mut ev = Evaluator::new(g);
    class
        .entries()
        .iter()
        .filter(|(_, r)| g.contains(*r))
        .map(|(n, _)| ev.eval(n))
        .collect()
}

#[derive(Debug)]
pub struct Evaluator<'g> {
    g: &'g Filter,
    memo: HashMap<PName, HFSet>,
}

impl<'g> Evaluator<'g> {
    pub fn new(g: &'g Filter) -> Self {
        Evaluator {
            g,
            memo: HashMap::new(),
        }
    }

    pub fn eval(&mut self, sigma: &PName) -> HFSet {
        if let Some(x) = self.memo.get(sigma) {
            return x.clone();
        }
        let mut elems = Vec::new();
        for (rho, r) in sigma.entries() {
            if self.g.contains(*r) {
                elems.push(self.eval(rho));
            }
        }
        let x = HFSet::make(elems);
        self.memo.insert(sigma.clone(), x.clone());
        x
    }
}

/// Groups names by rank, smallest first.
pub fn names_by_rank(names: &[PName]) -> BTreeMap<usize, Vec<PName>> {
    let mut out: BTreeMap<usize, Vec<PName>> = BTreeMap::new();
    for n in names {
        out.entry(n.rank()).or_default().push(n.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfset::v_stage;
    use crate::poset::{build_collapse, CollapseOptions};
    use alloc::vec;

    #[test]
    fn check_names() {
        assert_eq!(check_name(&HFSet::empty()), PName::empty());
        let one = check_name(&HFSet::singleton(HFSet::empty()));
        assert_eq!(one, PName::new([(PName::empty(), ONE)]));
    }

    #[test]
    fn check_names_evaluate_to_themselves() {
        let fork = ForcingNotion::fork();
        for g in fork.generic_filters() {
            for x in v_stage(3).unwrap() {
                assert_eq!(eval_name(&check_name(&x), &g), x);
            }
        }
    }

    #[test]
    fn op_names() {
        let e = PName::empty();
        let o = op_name(&e, &e);
        assert_eq!(o.len(), 1);
        let s = check_name(&HFSet::nat(2));
        assert_eq!(op_name(&s, &e).rank(), 4);
        let fork = ForcingNotion::fork();
        let sigma = PName::new([(e.clone(), 1)]);
        for g in fork.generic_filters() {
            let v = eval_name(&op_name(&sigma, &s), &g);
            assert_eq!(v, HFSet::kpair(eval_name(&sigma, &g), HFSet::nat(2)));
        }
    }

    #[test]
    fn exhaustive_universe_counts() {
        let triv = ForcingNotion::trivial();
        assert_eq!(name_universe(&triv, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap().len(), 2);
        let fork = ForcingNotion::fork();
        let u = name_universe(&fork, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        assert_eq!(u.len(), 8);
        assert!(is_subname_closed(&u));
        // |N_2| = 2^(|N_1|·|P|) for the trivial notion: 2^2.
        assert_eq!(name_universe(&triv, UniverseMode::Exhaustive(2), DEFAULT_NAME_BUDGET).unwrap().len(), 4);
        assert!(name_universe(&fork, UniverseMode::Exhaustive(2), DEFAULT_NAME_BUDGET).is_err());
    }

    #[test]
    fn seeded_universe() {
        let fork = ForcingNotion::fork();
        let sigma = PName::new([(PName::empty(), 2)]);
        let seed = op_name(&check_name(&HFSet::empty()), &sigma);
        let u = name_universe(&fork, UniverseMode::Seeded(core::slice::from_ref(&seed)), 100).unwrap();
        assert!(u.contains(&sigma));
        assert!(u.contains(&PName::empty()));
        assert!(u.contains(&seed));
        assert!(u.contains(&PName::new([(PName::empty(), ONE)])));
        assert!(u.contains(&PName::new([(PName::empty(), ONE), (sigma.clone(), ONE)])));
    }

    #[test]
    fn fork_evaluation() {
        let fork = ForcingNotion::fork();
        let gs = fork.generic_filters();
        let sigma = PName::new([(PName::empty(), 1)]);
        assert_eq!(eval_name(&sigma, &gs[0]), HFSet::singleton(HFSet::empty()));
        assert_eq!(eval_name(&sigma, &gs[1]), HFSet::empty());
        for g in &gs {
            assert_eq!(eval_name(&PName::empty(), g), HFSet::empty());
            let gv = eval_class(&g_dot(&fork), g);
            let want: BTreeSet<HFSet> = g.members().map(HFSet::nat).collect();
            assert_eq!(gv, want);
        }
    }

    #[test]
    fn collapse_names_evaluate() {
        let targets = v_stage(3).unwrap();
        let a = HFSet::make([HFSet::empty()]);
        let fa = build_collapse(3, &a, &CollapseOptions::default()).unwrap();
        let gs = fa.generic_filters();
        assert_eq!(gs.len(), 24);
        let eps = eps_dot(&fa).unwrap();
        let adot = a_dot(&fa).unwrap();
        for g in &gs {
            let f = fa.generic_bijection(g).unwrap();
            for (t, x) in targets.iter().enumerate() {
                let n = f.iter().position(|&y| y == t).unwrap();
                assert_eq!(eval_name(&n_dot(&fa, x).unwrap(), g), HFSet::nat(n));
            }
            let mut want = Vec::new();
            for i in 0..f.len() {
                for j in 0..f.len() {
                    if targets[f[j]].contains(&targets[f[i]]) {
                        want.push(HFSet::kpair(HFSet::nat(i), HFSet::nat(j)));
                    }
                }
            }
            assert_eq!(eval_name(&eps, g), HFSet::make(want));
            let a_ext: BTreeSet<HFSet> = (0..f.len()).filter(|&i| a.contains(&targets[f[i]])).map(HFSet::nat).collect();
            assert_eq!(eval_class(&adot, g), a_ext);
        }
        assert_eq!(eps_dot(&ForcingNotion::fork()), Err(Error::NotCollapse));
        let _ = vec![0];
    }
}
