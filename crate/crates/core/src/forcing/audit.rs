//! Structural laws every forcing relation must satisfy, checked by brute force.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::formula::Formula;
use crate::names::PName;
use crate::poset::{CondSet, ONE};

use super::relation::{Atomic, ForcingRelation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawReport {
    pub law: &'static str,
    pub checked: usize,
    pub failure: Option<String>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

struct Law {
    report: LawReport,
}

impl Law {
    fn new(law: &'static str) -> Self {
        Law {
            report: LawReport {
                law,
                checked: 0,
                failure: None,
            },
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.report.checked += 1;
        if !ok && self.report.failure.is_none() {
            self.report.failure = Some(what());
        }
    }
}

fn show(s: &CondSet) -> Vec<usize> {
    s.ones().collect()
}

/// Audits the atomic relation over the universe and the given sentences:
/// downward closure, density, modus ponens, the equality axioms and dense
/// decidedness.
pub fn audit(rel: &mut ForcingRelation<'_>, sentences: &[Formula]) -> Result<Vec<LawReport>> {
    let p = rel.notion();
    let universe: Vec<PName> = rel.universe().to_vec();
    let n = universe.len();

    let mut statements: Vec<(String, CondSet)> = Vec::new();
    let mut eq = alloc::vec![alloc::vec![p.empty_set(); n]; n];
    let mut mem = alloc::vec![alloc::vec![p.empty_set(); n]; n];
    for i in 0..n {
        for j in 0..n {
            eq[i][j] = rel.atomic(Atomic::Eq, &universe[i], &universe[j]);
            mem[i][j] = rel.atomic(Atomic::In, &universe[i], &universe[j]);
            statements.push((format!("u{i} = u{j}"), eq[i][j].clone()));
            statements.push((format!("u{i} ∈ u{j}"), mem[i][j].clone()));
        }
    }
    let mut forced: Vec<CondSet> = Vec::with_capacity(sentences.len());
    for (k, phi) in sentences.iter().enumerate() {
        let s = rel.forces(phi)?;
        statements.push((format!("sentence {k}"), s.clone()));
        forced.push(s);
    }

    let mut down = Law::new("downward closure");
    let mut dense = Law::new("density");
    let mut decided = Law::new("dense decidedness");
    for (what, s) in &statements {
        down.check(p.interior(s) == *s, || format!("{what} forced by {:?}", show(s)));
        dense.check(p.dense_below_set(s) == *s, || format!("{what} forced by {:?}", show(s)));
        let mut either = s.clone();
        either.union_with(&rel.negate(s));
        decided.check(p.is_dense(&either), || format!("{what} is not densely decided"));
    }

    // (φ → ψ) is ¬φ ∨ ψ; the law is p ⊩ φ, p ⊩ φ → ψ ⟹ p ⊩ ψ.
    let implies = |rel: &ForcingRelation<'_>, a: &CondSet, b: &CondSet| rel.disjoin([&rel.negate(a), b]);
    let mut mp = Law::new("modus ponens");
    for (i, a) in forced.iter().enumerate() {
        for (j, b) in forced.iter().enumerate() {
            let mut both = implies(rel, a, b);
            both.intersect_with(a);
            mp.check(both.is_subset(b), || format!("sentences {i}, {j}"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut both = implies(rel, &mem[i][j], &eq[i][j]);
            both.intersect_with(&mem[i][j]);
            mp.check(both.is_subset(&eq[i][j]), || format!("u{i} ∈ u{j} and u{i} = u{j}"));
        }
    }

    let valid = |s: &CondSet| s.contains(ONE);
    let mut eqax = Law::new("equality axioms");
    for i in 0..n {
        eqax.check(valid(&eq[i][i]), || format!("u{i} = u{i}"));
        for j in 0..n {
            eqax.check(valid(&implies(rel, &eq[i][j], &eq[j][i])), || format!("symmetry at u{i}, u{j}"));
            for k in 0..n {
                let mut both = eq[i][j].clone();
                both.intersect_with(&eq[j][k]);
                eqax.check(valid(&implies(rel, &both, &eq[i][k])), || {
                    format!("transitivity at u{i}, u{j}, u{k}")
                });
                let mut a = eq[i][j].clone();
                a.intersect_with(&mem[k][i]);
                eqax.check(valid(&implies(rel, &a, &mem[k][j])), || {
                    format!("u{i} = u{j} ∧ u{k} ∈ u{i} → u{k} ∈ u{j}")
                });
                let mut b = eq[i][j].clone();
                b.intersect_with(&mem[i][k]);
                eqax.check(valid(&implies(rel, &b, &mem[j][k])), || {
                    format!("u{i} = u{j} ∧ u{i} ∈ u{k} → u{j} ∈ u{k}")
                });
            }
        }
    }
    Ok(alloc::vec![down.report, dense.report, mp.report, eqax.report, decided.report])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Term, Var};
    use crate::names::{name_universe, UniverseMode, DEFAULT_NAME_BUDGET};
    use crate::poset::ForcingNotion;
    use alloc::vec;

    fn sentences() -> Vec<Formula> {
        let x = Term::var("x");
        vec![
            Formula::exists(vec![Var::from("x")], Formula::in_g(x.clone())),
            Formula::forall(vec![Var::from("x")], Formula::eq(x.clone(), x)),
        ]
    }

    #[test]
    fn clean_relations_pass() {
        for p in [ForcingNotion::fork(), ForcingNotion::chain(2), ForcingNotion::antichain(2)] {
            let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
            let mut rel = ForcingRelation::with_universe(&p, u).unwrap();
            for r in audit(&mut rel, &sentences()).unwrap() {
                assert!(r.passed(), "{r:?}");
                assert!(r.checked > 0);
            }
        }
    }

    #[test]
    fn a_flipped_entry_is_caught() {
        let p = ForcingNotion::fork();
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u.clone()).unwrap();
        // Claim that only the top condition forces ∅ = ∅.
        let mut only_top = p.empty_set();
        only_top.insert(ONE);
        rel.override_atomic(Atomic::Eq, &u[0], &u[0], only_top);
        let reports = audit(&mut rel, &sentences()).unwrap();
        assert!(reports.iter().any(|r| !r.passed()));
        assert!(!reports.iter().find(|r| r.law == "downward closure").unwrap().passed());
    }
}
