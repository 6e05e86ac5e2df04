//! Finite forcing notions: preorders with a top element at index 0.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hfset::{v_stage, HFSet};

/// A set of condition indices.
pub type CondSet = FixedBitSet;

/// Index of the top condition in every notion.
pub const ONE: usize = 0;

/// Above this size, dense sets are sampled instead of enumerated.
pub const EXHAUSTIVE_DENSE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tag {
    Top,
    Plain,
    /// Partial injection from the clock, as target indices into the stage.
    CollapseFn(Vec<Option<usize>>),
    SupIn(usize, usize),
    SupA(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collapse {
    pub stage: usize,
    /// `V_n` in canonical order; the clock has the same size.
    pub targets: Vec<HFSet>,
    pub a: HFSet,
    pub functions: BTreeMap<Vec<Option<usize>>, usize>,
    pub sup_in: BTreeMap<(usize, usize), usize>,
    pub sup_a: BTreeMap<usize, usize>,
}

impl Collapse {
    pub fn clock(&self) -> usize {
        self.targets.len()
    }

    /// The condition `(n ↦ targets[t])`.
    pub fn singleton(&self, n: usize, t: usize) -> usize {
        let mut f = vec![None; self.clock()];
        f[n] = Some(t);
        self.functions[&f]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcingNotion {
    labels: Vec<String>,
    tags: Vec<Tag>,
    /// `below[p] = {q : q ≤ p}`
    below: Vec<CondSet>,
    /// `above[p] = {q : p ≤ q}`
    above: Vec<CondSet>,
    collapse: Option<Collapse>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Filter {
    members: CondSet,
}

impl Filter {
    pub fn new(members: CondSet) -> Filter {
        Filter { members }
    }

    pub fn contains(&self, p: usize) -> bool {
        self.members.contains(p)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }

    pub fn as_set(&self) -> &CondSet {
        &self.members
    }
}

impl ForcingNotion {
    /// Builds a notion from generator pairs `(p, q)` meaning `p ≤ q`; the
    /// reflexive-transitive closure is taken. Condition 0 must end up on top.
    pub fn from_generators(labels: Vec<String>, le: &[(usize, usize)]) -> Result<ForcingNotion> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidNotion("no conditions".into()));
        }
        let mut above: Vec<CondSet> = (0..n)
            .map(|p| {
                let mut s = CondSet::with_capacity(n);
                s.insert(p);
                s
            })
            .collect();
        for &(p, q) in le {
            if p >= n || q >= n {
                return Err(Error::InvalidNotion(format!("pair ({p}, {q}) out of range")));
            }
            above[p].insert(q);
        }
        for k in 0..n {
            let ak = above[k].clone();
            for set in above.iter_mut() {
                if set.contains(k) {
                    set.union_with(&ak);
                }
            }
        }
        Self::from_above(labels, vec![Tag::Plain; n], above, None)
    }

    fn from_above(
        labels: Vec<String>,
        mut tags: Vec<Tag>,
        above: Vec<CondSet>,
        collapse: Option<Collapse>,
    ) -> Result<ForcingNotion> {
        let n = labels.len();
        if let Some(p) = (0..n).find(|&p| !above[p].contains(ONE)) {
            return Err(Error::InvalidNotion(format!(
                "condition {} is not below {}",
                labels[p], labels[ONE]
            )));
        }
        let mut below = vec![CondSet::with_capacity(n); n];
        for (p, ups) in above.iter().enumerate() {
            for q in ups.ones() {
                below[q].insert(p);
            }
        }
        if tags[ONE] == Tag::Plain {
            tags[ONE] = Tag::Top;
        }
        Ok(ForcingNotion {
            labels,
            tags,
            below,
            above,
            collapse,
        })
    }

    /// `{1}`
    pub fn trivial() -> ForcingNotion {
        Self::from_generators(vec!["1".to_string()], &[]).unwrap()
    }

    /// `1 > a > b > …` with `len` conditions.
    pub fn chain(len: usize) -> ForcingNotion {
        let labels = (0..len).map(|i| if i == 0 { "1".to_string() } else { format!("c{i}") }).collect();
        let pairs: Vec<(usize, usize)> = (1..len).map(|i| (i, i - 1)).collect();
        Self::from_generators(labels, &pairs).unwrap()
    }

    /// `1` above `k` pairwise incompatible atoms.
    pub fn antichain(k: usize) -> ForcingNotion {
        let labels = (0..=k).map(|i| if i == 0 { "1".to_string() } else { format!("a{i}") }).collect();
        let pairs: Vec<(usize, usize)> = (1..=k).map(|i| (i, 0)).collect();
        Self::from_generators(labels, &pairs).unwrap()
    }

    /// `{1 > a, 1 > b}` with `a ⊥ b`.
    pub fn fork() -> ForcingNotion {
        Self::from_generators(
            vec!["1".to_string(), "a".to_string(), "b".to_string()],
            &[(1, 0), (2, 0)],
        )
        .unwrap()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, p: usize) -> &str {
        &self.labels[p]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn tag(&self, p: usize) -> &Tag {
        &self.tags[p]
    }

    pub fn collapse(&self) -> Option<&Collapse> {
        self.collapse.as_ref()
    }

    /// `p ≤ q`
    pub fn le(&self, p: usize, q: usize) -> bool {
        self.above[p].contains(q)
    }

    pub fn below(&self, p: usize) -> &CondSet {
        &self.below[p]
    }

    pub fn above(&self, p: usize) -> &CondSet {
        &self.above[p]
    }

    pub fn equivalent(&self, p: usize, q: usize) -> bool {
        self.le(p, q) && self.le(q, p)
    }

    pub fn compatible(&self, p: usize, q: usize) -> bool {
        !self.below[p].is_disjoint(&self.below[q])
    }

    pub fn empty_set(&self) -> CondSet {
        CondSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> CondSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    /// Generating pairs of the order (the covering relation, up to equivalence).
    pub fn le_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.len() {
            for q in self.above[p].ones() {
                if p != q {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// `↑D`
    pub fn up_closure(&self, d: &CondSet) -> CondSet {
        let mut out = self.empty_set();
        for p in d.ones() {
            out.union_with(&self.above[p]);
        }
        out
    }

    /// `↓D`
    pub fn down_closure(&self, d: &CondSet) -> CondSet {
        let mut out = self.empty_set();
        for p in d.ones() {
            out.union_with(&self.below[p]);
        }
        out
    }

    /// `{p : below(p) ⊆ U}`
    pub fn interior(&self, u: &CondSet) -> CondSet {
        let mut out = self.empty_set();
        for p in 0..self.len() {
            if self.below[p].is_subset(u) {
                out.insert(p);
            }
        }
        out
    }

    /// `{p : D is dense below p}`
    pub fn dense_below_set(&self, d: &CondSet) -> CondSet {
        self.interior(&self.up_closure(d))
    }

    pub fn is_dense(&self, d: &CondSet) -> bool {
        (0..self.len()).all(|p| !self.below[p].is_disjoint(d))
    }

    pub fn is_dense_below(&self, d: &CondSet, p: usize) -> bool {
        self.below[p]
            .ones()
            .all(|q| !self.below[q].is_disjoint(d))
    }

    /// `None` if separative, else a pair `(p, q)` with `p ≰ q` such that
    /// every `r ≤ p` is compatible with `q`.
    pub fn separativity_counterexample(&self) -> Option<(usize, usize)> {
        for p in 0..self.len() {
            for q in 0..self.len() {
                if !self.le(p, q) && self.below[p].ones().all(|r| self.compatible(r, q)) {
                    return Some((p, q));
                }
            }
        }
        None
    }

    pub fn is_separative(&self) -> bool {
        self.separativity_counterexample().is_none()
    }

    pub fn is_minimal(&self, p: usize) -> bool {
        self.below[p].is_subset(&self.above[p])
    }

    /// One representative (the smallest index) per class of minimal elements.
    pub fn minimal_representatives(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&p| self.is_minimal(p))
            .filter(|&p| self.below[p].ones().all(|q| q >= p))
            .collect()
    }

    /// All generic filters: the upward closures of minimal elements.
    pub fn generic_filters(&self) -> Vec<Filter> {
        self.minimal_representatives()
            .into_iter()
            .map(|m| Filter::new(self.above[m].clone()))
            .collect()
    }

    /// The least-index condition generating a generic filter.
    pub fn filter_generator(&self, g: &Filter) -> Option<usize> {
        g.members().find(|&m| self.is_minimal(m) && g.as_set().is_subset(&self.above[m]))
    }

    pub fn is_filter(&self, s: &CondSet) -> bool {
        if s.is_clear() {
            return false;
        }
        let up = s.ones().all(|p| self.above[p].is_subset(s));
        let directed = s.ones().all(|p| {
            s.ones().all(|q| {
                let mut common = self.below[p].clone();
                common.intersect_with(&self.below[q]);
                !common.is_disjoint(s)
            })
        });
        up && directed
    }

    /// Checks `filters` against the definition of genericity. Exhaustive up to
    /// [`EXHAUSTIVE_DENSE_LIMIT`] conditions; above that, `samples` dense sets
    /// are drawn with the given seed.
    pub fn verify_generic_filters(&self, filters: &[Filter], samples: usize, seed: u64) -> core::result::Result<(), String> {
        let n = self.len();
        for g in filters {
            if !self.is_filter(g.as_set()) {
                return Err(format!("{:?} is not a filter", g.members().collect::<Vec<_>>()));
            }
        }
        for (i, g) in filters.iter().enumerate() {
            if filters[..i].contains(g) {
                return Err("duplicate filter".into());
            }
        }
        if n <= EXHAUSTIVE_DENSE_LIMIT {
            let subsets = || {
                (0u32..1 << n).map(move |mask| {
                    let mut s = CondSet::with_capacity(n);
                    for p in 0..n {
                        if mask >> p & 1 == 1 {
                            s.insert(p);
                        }
                    }
                    s
                })
            };
            let dense: Vec<CondSet> = subsets().filter(|d| self.is_dense(d)).collect();
            for g in filters {
                if let Some(d) = dense.iter().find(|d| d.is_disjoint(g.as_set())) {
                    return Err(format!("filter misses dense set {:?}", d.ones().collect::<Vec<_>>()));
                }
            }
            let all: Vec<CondSet> = subsets().filter(|s| self.is_filter(s)).collect();
            for f in &all {
                let maximal = !all.iter().any(|h| h != f && f.is_subset(h));
                let listed = filters.iter().any(|g| g.as_set() == f);
                if maximal && !listed && dense.iter().all(|d| !d.is_disjoint(f)) {
                    return Err(format!("omitted generic filter {:?}", f.ones().collect::<Vec<_>>()));
                }
            }
            return Ok(());
        }
        let reps = self.minimal_representatives();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mut d = self.empty_set();
            for p in 0..n {
                if rng.gen_bool(0.5) {
                    d.insert(p);
                }
            }
            // A set is dense iff it meets every class of minimal elements.
            for &m in &reps {
                if d.is_disjoint(&self.below[m]) {
                    let class: Vec<usize> = self.below[m].ones().collect();
                    d.insert(class[rng.gen_range(0..class.len())]);
                }
            }
            debug_assert!(self.is_dense(&d));
            for g in filters {
                if d.is_disjoint(g.as_set()) {
                    return Err(format!("filter misses sampled dense set {:?}", d.ones().collect::<Vec<_>>()));
                }
            }
        }
        Ok(())
    }

    /// For a collapse notion, the total bijection contained in `g`, as target indices.
    pub fn generic_bijection(&self, g: &Filter) -> Option<Vec<usize>> {
        g.members().find_map(|p| match &self.tags[p] {
            Tag::CollapseFn(f) if f.iter().all(Option::is_some) => Some(f.iter().map(|t| t.unwrap()).collect()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CollapseOptions {
    /// Keep `e_{i,j}` / `a_i` tokens that no collapse function lies below
    /// (the supremum of an empty family). Such tokens are atoms of the order.
    pub keep_empty_suprema: bool,
    pub max_conditions: usize,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            keep_empty_suprema: false,
            max_conditions: 100_000,
        }
    }
}

/// The finite collapse notion with supremum tokens over `V_n`, clock `|V_n|`.
pub fn build_collapse(n: usize, a: &HFSet, opts: &CollapseOptions) -> Result<ForcingNotion> {
    let targets = v_stage(n)?;
    let k = targets.len();
    let in_a: Vec<bool> = targets.iter().map(|t| a.contains(t)).collect();
    if a.children().iter().any(|x| targets.binary_search(x).is_err()) {
        return Err(Error::Invalid(format!("A = {a:?} is not a subset of V_{n}")));
    }
    // count partial injections: sum_j C(k,j)^2 j!
    let mut count: u128 = 0;
    for j in 0..=k as u128 {
        let mut c: u128 = 1;
        for i in 0..j {
            c = c * (k as u128 - i) / (i + 1);
        }
        let mut f: u128 = 1;
        for i in 1..=j {
            f *= i;
        }
        count += c * c * f;
    }
    count += (k * k + k) as u128;
    if count > opts.max_conditions as u128 {
        return Err(Error::budget("collapse conditions", count, opts.max_conditions as u64));
    }

    let mut fns: Vec<Vec<Option<usize>>> = Vec::new();
    let mut cur = vec![None; k];
    fn rec(i: usize, used: u64, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        cur[i] = None;
        rec(i + 1, used, cur, out);
        for t in 0..cur.len() {
            if used >> t & 1 == 0 {
                cur[i] = Some(t);
                rec(i + 1, used | 1 << t, cur, out);
            }
        }
        cur[i] = None;
    }
    rec(0, 0, &mut cur, &mut fns);
    fns.sort_by_key(|f| (f.iter().filter(|x| x.is_some()).count(), f.clone()));

    let member = |x: usize, y: usize| targets[y].contains(&targets[x]);
    let mut labels: Vec<String> = Vec::new();
    let mut tags: Vec<Tag> = Vec::new();
    let mut functions = BTreeMap::new();
    for f in &fns {
        functions.insert(f.clone(), labels.len());
        let body: Vec<String> = f
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| format!("{i}:{t}")))
            .collect();
        labels.push(if body.is_empty() { "one".into() } else { format!("f{}", body.join(",")) });
        tags.push(Tag::CollapseFn(f.clone()));
    }
    let below_ein = |f: &Vec<Option<usize>>, i: usize, j: usize| matches!((f[i], f[j]), (Some(x), Some(y)) if member(x, y));
    let below_a = |f: &Vec<Option<usize>>, i: usize| matches!(f[i], Some(x) if in_a[x]);
    let mut sup_in = BTreeMap::new();
    let mut sup_a = BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            if opts.keep_empty_suprema || fns.iter().any(|f| below_ein(f, i, j)) {
                sup_in.insert((i, j), labels.len());
                labels.push(format!("e{i},{j}"));
                tags.push(Tag::SupIn(i, j));
            }
        }
    }
    for i in 0..k {
        if opts.keep_empty_suprema || fns.iter().any(|f| below_a(f, i)) {
            sup_a.insert(i, labels.len());
            labels.push(format!("a{i}"));
            tags.push(Tag::SupA(i));
        }
    }

    let total = labels.len();
    let mut above: Vec<CondSet> = (0..total)
        .map(|p| {
            let mut s = CondSet::with_capacity(total);
            s.insert(p);
            s.insert(ONE);
            s
        })
        .collect();
    for (p, f) in fns.iter().enumerate() {
        for (q, g) in fns.iter().enumerate() {
            if g.iter().zip(f).all(|(gx, fx)| gx.is_none() || gx == fx) {
                above[p].insert(q);
            }
        }
        for (&(i, j), &q) in &sup_in {
            if below_ein(f, i, j) {
                above[p].insert(q);
            }
        }
        for (&i, &q) in &sup_a {
            if below_a(f, i) {
                above[p].insert(q);
            }
        }
    }
    let collapse = Collapse {
        stage: n,
        targets,
        a: a.clone(),
        functions,
        sup_in,
        sup_a,
    };
    ForcingNotion::from_above(labels, tags, above, Some(collapse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, xs: &[usize]) -> CondSet {
        let mut s = CondSet::with_capacity(n);
        for &x in xs {
            s.insert(x);
        }
        s
    }

    #[test]
    fn separativity() {
        assert!(ForcingNotion::trivial().is_separative());
        assert_eq!(ForcingNotion::chain(2).separativity_counterexample(), Some((0, 1)));
        assert!(ForcingNotion::fork().is_separative());
    }

    #[test]
    fn density() {
        let fork = ForcingNotion::fork();
        assert!(fork.is_dense(&set(3, &[1, 2])));
        assert!(!fork.is_dense(&set(3, &[1])));
        assert!(fork.is_dense_below(&set(3, &[1]), 1));
        assert!(!fork.is_dense_below(&set(3, &[1]), 0));
    }

    #[test]
    fn fork_filters() {
        let fork = ForcingNotion::fork();
        let gs = fork.generic_filters();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[0].members().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(gs[1].members().collect::<Vec<_>>(), vec![0, 2]);
        fork.verify_generic_filters(&gs, 0, 0).unwrap();
        assert!(fork.verify_generic_filters(&gs[..1], 0, 0).is_err());
        let triv = ForcingNotion::trivial();
        assert_eq!(triv.generic_filters().len(), 1);
    }

    #[test]
    fn filters_on_preorders() {
        // 1 above a ≡ b: one class of minimal elements.
        let p = ForcingNotion::from_generators(
            vec!["1".into(), "a".into(), "b".into()],
            &[(1, 0), (1, 2), (2, 1)],
        )
        .unwrap();
        let gs = p.generic_filters();
        assert_eq!(gs.len(), 1);
        p.verify_generic_filters(&gs, 0, 0).unwrap();
    }

    #[test]
    fn top_required() {
        assert!(ForcingNotion::from_generators(vec!["1".into(), "a".into()], &[]).is_err());
    }

    #[test]
    fn collapse_count_literal() {
        let opts = CollapseOptions {
            keep_empty_suprema: true,
            ..CollapseOptions::default()
        };
        let fa = build_collapse(2, &HFSet::empty(), &opts).unwrap();
        assert_eq!(fa.len(), 7 + 4 + 2);
        assert_eq!(fa.tag(ONE), &Tag::CollapseFn(vec![None, None]));
    }

    #[test]
    fn collapse_order() {
        let fa = build_collapse(2, &HFSet::empty(), &CollapseOptions::default()).unwrap();
        let c = fa.collapse().unwrap();
        // targets: 0 = ∅, 1 = {∅}
        let f = c.functions[&vec![Some(0), Some(1)]];
        let e01 = c.sup_in[&(0, 1)];
        assert!(fa.le(f, e01));
        assert!(!fa.le(c.functions[&vec![Some(1), Some(0)]], e01));
        // e_{i,i} and a_i (A = ∅) have empty support and are pruned.
        assert_eq!(fa.len(), 7 + 2);
        for p in 0..fa.len() {
            assert!(fa.le(p, ONE));
        }
    }

    #[test]
    fn tokens_never_below_functions() {
        let a = HFSet::make([HFSet::empty()]);
        let fa = build_collapse(2, &a, &CollapseOptions::default()).unwrap();
        for p in 0..fa.len() {
            if let Tag::SupA(_) | Tag::SupIn(..) = fa.tag(p) {
                for q in 1..fa.len() {
                    if q != p {
                        assert!(!fa.le(p, q));
                    }
                }
            }
        }
    }

    #[test]
    fn collapse_filters_are_bijections() {
        let a = HFSet::make([HFSet::empty(), HFSet::nat(2)]);
        let fa = build_collapse(3, &a, &CollapseOptions::default()).unwrap();
        let gs = fa.generic_filters();
        assert_eq!(gs.len(), 24);
        for &m in &fa.minimal_representatives() {
            match fa.tag(m) {
                Tag::CollapseFn(f) => assert!(f.iter().all(Option::is_some)),
                t => panic!("minimal non-bijection {t:?}"),
            }
        }
        fa.verify_generic_filters(&gs, 64, 7).unwrap();
        // transitivity: extensions inherit token membership
        for p in 0..fa.len() {
            for q in fa.below(p).ones() {
                assert!(fa.above(p).is_subset(fa.above(q)));
            }
        }
    }

    #[test]
    fn literal_collapse_has_degenerate_filters() {
        let opts = CollapseOptions {
            keep_empty_suprema: true,
            ..CollapseOptions::default()
        };
        let fa = build_collapse(3, &HFSet::make([HFSet::empty()]), &opts).unwrap();
        let gs = fa.generic_filters();
        let through_bijection = gs.iter().filter(|g| fa.generic_bijection(g).is_some()).count();
        assert_eq!(through_bijection, 24);
        assert_eq!(gs.len(), 24 + 4);
    }
}
