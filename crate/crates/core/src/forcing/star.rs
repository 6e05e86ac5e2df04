//! Reduction of quantifier-free sentences of the forcing language to a single
//! equation `a_φ = b_φ` between names, forced by exactly the same conditions.
//!
//! Five passes, each exposed on its own: `Ġ`-elimination, De Morgan, negated
//! atoms, positive atoms, connectives.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::formula::{Formula, Kind, Term};
use crate::names::{cond_check, op_name, PName};
use crate::poset::{ForcingNotion, ONE};

fn name(t: &Term) -> Result<PName> {
    match t {
        Term::Name(n) => Ok(n.clone()),
        Term::Var(v) => Err(Error::UnboundVariable(v.clone())),
        Term::Ground(_) => Err(Error::Unsupported("ground constants in the forcing language")),
        Term::Pair(a, b) => Ok(op_name(&name(a)?, &name(b)?)),
    }
}

fn quantifier_free(phi: &Formula) -> Result<()> {
    if !phi.is_quantifier_free() {
        return Err(Error::Unsupported("quantifiers in the star translation"));
    }
    if let Some(v) = phi.free_vars().first() {
        return Err(Error::UnboundVariable(v.clone()));
    }
    Ok(())
}

/// Index of the condition whose check name is `sigma`, if any.
fn condition_of(p: &ForcingNotion, checks: &HashMap<PName, usize>, sigma: &PName) -> Option<usize> {
    let q = checks.get(sigma).copied()?;
    (q < p.len()).then_some(q)
}

fn check_table(p: &ForcingNotion) -> HashMap<PName, usize> {
    (0..p.len()).map(|q| (cond_check(q), q)).collect()
}

/// `σ ∈ Ġ ↦ ⋁_p (p̌ ∈ Ġ ∧ σ = p̌)` unless `σ` already is a check name of a condition.
pub fn eliminate_g(p: &ForcingNotion, phi: &Formula) -> Result<Formula> {
    quantifier_free(phi)?;
    let checks = check_table(p);
    fn go(p: &ForcingNotion, checks: &HashMap<PName, usize>, phi: &Formula) -> Result<Formula> {
        Ok(match phi.kind() {
            Kind::InG(t) => {
                let sigma = name(t)?;
                if condition_of(p, checks, &sigma).is_some() {
                    Formula::in_g(Term::Name(sigma))
                } else {
                    Formula::or(
                        (0..p.len())
                            .map(|q| {
                                let c = Term::Name(cond_check(q));
                                Formula::and(alloc::vec![Formula::in_g(c.clone()), Formula::eq(Term::Name(sigma.clone()), c)])
                            })
                            .collect(),
                    )
                }
            }
            Kind::Eq(a, b) => Formula::eq(Term::Name(name(a)?), Term::Name(name(b)?)),
            Kind::In(a, b) => Formula::mem(Term::Name(name(a)?), Term::Name(name(b)?)),
            Kind::InClass(..) => return Err(Error::Unsupported("class names other than Ġ in the star translation")),
            Kind::Tr(..) => return Err(Error::Unsupported("truth atoms in the star translation")),
            Kind::Not(g) => Formula::not(go(p, checks, g)?),
            Kind::And(gs) => Formula::and(gs.iter().map(|g| go(p, checks, g)).collect::<Result<_>>()?),
            Kind::Or(gs) => Formula::or(gs.iter().map(|g| go(p, checks, g)).collect::<Result<_>>()?),
            Kind::Forall(..) | Kind::Exists(..) => unreachable!(),
        })
    }
    go(p, &checks, phi)
}

/// Negation normal form: negations only on atoms.
pub fn push_negations(phi: &Formula) -> Result<Formula> {
    quantifier_free(phi)?;
    fn go(phi: &Formula, neg: bool) -> Formula {
        match phi.kind() {
            Kind::Not(g) => go(g, !neg),
            Kind::And(gs) | Kind::Or(gs) => {
                let parts: Vec<Formula> = gs.iter().map(|g| go(g, neg)).collect();
                let conj = matches!(phi.kind(), Kind::And(_)) != neg;
                if conj {
                    Formula::and(parts)
                } else {
                    Formula::or(parts)
                }
            }
            _ if neg => Formula::not(phi.clone()),
            _ => phi.clone(),
        }
    }
    Ok(go(phi, false))
}

#[derive(Default)]
struct NegAtoms {
    neq: HashMap<(PName, PName), Formula>,
    nsub: HashMap<(PName, PName), Formula>,
    nin: HashMap<(PName, PName), Formula>,
}

impl NegAtoms {
    /// `σ ≠ τ ↦ σ ⊈ τ ∨ τ ⊈ σ`
    fn neq(&mut self, s: &PName, t: &PName) -> Formula {
        let key = (s.clone(), t.clone());
        if let Some(f) = self.neq.get(&key) {
            return f.clone();
        }
        let f = Formula::or(alloc::vec![self.nsub(s, t), self.nsub(t, s)]);
        self.neq.insert(key, f.clone());
        f
    }

    /// `σ ⊈ τ ↦ ⋁_{⟨ρ,r⟩∈σ} (ř ∈ Ġ ∧ ρ ∉ τ)`
    fn nsub(&mut self, s: &PName, t: &PName) -> Formula {
        let key = (s.clone(), t.clone());
        if let Some(f) = self.nsub.get(&key) {
            return f.clone();
        }
        let f = Formula::or(
            s.entries()
                .iter()
                .map(|(rho, r)| Formula::and(alloc::vec![Formula::in_g(Term::Name(cond_check(*r))), self.nin(rho, t)]))
                .collect(),
        );
        self.nsub.insert(key, f.clone());
        f
    }

    /// `σ ∉ τ ↦ ⋀_{⟨ρ,r⟩∈τ} (ř ∉ Ġ ∨ σ ≠ ρ)`
    fn nin(&mut self, s: &PName, t: &PName) -> Formula {
        let key = (s.clone(), t.clone());
        if let Some(f) = self.nin.get(&key) {
            return f.clone();
        }
        let f = Formula::and(
            t.entries()
                .iter()
                .map(|(rho, r)| {
                    Formula::or(alloc::vec![Formula::not(Formula::in_g(Term::Name(cond_check(*r)))), self.neq(s, rho)])
                })
                .collect(),
        );
        self.nin.insert(key, f.clone());
        f
    }
}

/// Rewrites negated `=` and `∈` until the only negated atoms are `q̌ ∉ Ġ`.
/// Expects negation normal form after `Ġ`-elimination.
pub fn eliminate_negated_atoms(phi: &Formula) -> Result<Formula> {
    quantifier_free(phi)?;
    fn go(n: &mut NegAtoms, phi: &Formula) -> Result<Formula> {
        Ok(match phi.kind() {
            Kind::Not(g) => match g.kind() {
                Kind::Eq(a, b) => n.neq(&name(a)?, &name(b)?),
                Kind::In(a, b) => n.nin(&name(a)?, &name(b)?),
                Kind::InG(_) => phi.clone(),
                _ => return Err(Error::Invalid("expected negation normal form".into())),
            },
            Kind::And(gs) => Formula::and(gs.iter().map(|g| go(n, g)).collect::<Result<_>>()?),
            Kind::Or(gs) => Formula::or(gs.iter().map(|g| go(n, g)).collect::<Result<_>>()?),
            _ => phi.clone(),
        })
    }
    go(&mut NegAtoms::default(), phi)
}

/// `σ ∈ τ ↦ τ = τ ∪ {⟨σ,1⟩}`, `q̌ ∈ Ġ ↦ {⟨∅,q⟩} = {⟨∅,1⟩}`, `q̌ ∉ Ġ ↦ {⟨∅,q⟩} = ∅`.
pub fn eliminate_positive_atoms(p: &ForcingNotion, phi: &Formula) -> Result<Formula> {
    quantifier_free(phi)?;
    let checks = check_table(p);
    let token = |q: usize| Term::Name(PName::new([(PName::empty(), q)]));
    let cond = |t: &Term| -> Result<usize> {
        condition_of(p, &checks, &name(t)?).ok_or(Error::Invalid("Ġ applied to a name that is not a condition".into()))
    };
    fn go(
        phi: &Formula,
        token: &dyn Fn(usize) -> Term,
        cond: &dyn Fn(&Term) -> Result<usize>,
    ) -> Result<Formula> {
        Ok(match phi.kind() {
            Kind::Eq(..) => phi.clone(),
            Kind::In(a, b) => {
                let (s, t) = (name(a)?, name(b)?);
                let bigger = t.with_entry(s, ONE);
                Formula::eq(Term::Name(t), Term::Name(bigger))
            }
            Kind::InG(t) => Formula::eq(token(cond(t)?), token(ONE)),
            Kind::Not(g) => match g.kind() {
                Kind::InG(t) => Formula::eq(token(cond(t)?), Term::Name(PName::empty())),
                _ => return Err(Error::Invalid("unexpected negation after negated-atom elimination".into())),
            },
            Kind::And(gs) => Formula::and(gs.iter().map(|g| go(g, token, cond)).collect::<Result<_>>()?),
            Kind::Or(gs) => Formula::or(gs.iter().map(|g| go(g, token, cond)).collect::<Result<_>>()?),
            _ => return Err(Error::Invalid("unexpected formula in positive-atom elimination".into())),
        })
    }
    go(phi, &token, &cond)
}

/// Folds a positive combination of equations into one pair `(a, b)`.
pub fn eliminate_connectives(phi: &Formula) -> Result<(PName, PName)> {
    quantifier_free(phi)?;
    fn go(memo: &mut HashMap<Formula, (PName, PName)>, phi: &Formula) -> Result<(PName, PName)> {
        if let Some(x) = memo.get(phi) {
            return Ok(x.clone());
        }
        let out = match phi.kind() {
            Kind::Eq(a, b) => (name(a)?, name(b)?),
            Kind::And(gs) => {
                let parts: Vec<(PName, PName)> = gs.iter().map(|g| go(memo, g)).collect::<Result<_>>()?;
                let a = PName::new(parts.iter().enumerate().map(|(i, (a, _))| (op_name(&cond_check(i), a), ONE)).collect::<Vec<_>>());
                let b = PName::new(parts.iter().enumerate().map(|(i, (_, b))| (op_name(&cond_check(i), b), ONE)).collect::<Vec<_>>());
                (a, b)
            }
            Kind::Or(gs) => {
                let parts: Vec<(PName, PName)> = gs.iter().map(|g| go(memo, g)).collect::<Result<_>>()?;
                let left: Vec<PName> = parts.iter().enumerate().map(|(i, (a, _))| op_name(&cond_check(i), a)).collect();
                let right: Vec<PName> = parts.iter().enumerate().map(|(i, (_, b))| op_name(&cond_check(i), b)).collect();
                let u = PName::new(left.iter().chain(&right).map(|n| (n.clone(), ONE)).collect::<Vec<_>>());
                let u_j = |j: usize| {
                    PName::new(
                        left.iter()
                            .map(|n| (n.clone(), ONE))
                            .chain(right.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, n)| (n.clone(), ONE)))
                            .collect::<Vec<_>>(),
                    )
                };
                let a = PName::new((0..parts.len()).map(|j| (u_j(j), ONE)).collect::<Vec<_>>());
                let b = a.with_entry(u, ONE);
                (a, b)
            }
            _ => return Err(Error::Invalid("unexpected formula in connective elimination".into())),
        };
        memo.insert(phi.clone(), out.clone());
        Ok(out)
    }
    go(&mut HashMap::new(), phi)
}

/// All five passes: `φ ↦ (a_φ, b_φ)`.
pub fn star_translate(p: &ForcingNotion, phi: &Formula) -> Result<(PName, PName)> {
    let f = eliminate_g(p, phi)?;
    let f = push_negations(&f)?;
    let f = eliminate_negated_atoms(&f)?;
    let f = eliminate_positive_atoms(p, &f)?;
    eliminate_connectives(&f)
}

/// `a_φ = b_φ` as a formula.
pub fn star_equation(p: &ForcingNotion, phi: &Formula) -> Result<Formula> {
    let (a, b) = star_translate(p, phi)?;
    Ok(Formula::eq(Term::Name(a), Term::Name(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::relation::ForcingRelation;
    use crate::names::check_name;
    use alloc::vec;

    fn sentences(p: &ForcingNotion) -> Vec<Formula> {
        let e = Term::Name(PName::empty());
        let s = Term::Name(PName::new([(PName::empty(), p.len() - 1)]));
        let one = Term::Name(check_name(&crate::hfset::HFSet::nat(1)));
        let a = Formula::mem(e.clone(), s.clone());
        let b = Formula::eq(s.clone(), one.clone());
        let c = Formula::in_g(s.clone());
        let d = Formula::in_g(Term::Name(cond_check(p.len() - 1)));
        vec![
            a.clone(),
            Formula::not(a.clone()),
            b.clone(),
            Formula::not(b.clone()),
            c.clone(),
            Formula::not(c.clone()),
            d.clone(),
            Formula::not(d.clone()),
            Formula::and(vec![a.clone(), Formula::not(b.clone())]),
            Formula::or(vec![Formula::not(a.clone()), d.clone(), Formula::not(c)]),
            Formula::not(Formula::or(vec![b, Formula::and(vec![d, a])])),
            Formula::truth(),
            Formula::falsity(),
            Formula::mem(one, e),
        ]
    }

    #[test]
    fn equation_is_forced_exactly_when_the_sentence_is() {
        for p in [ForcingNotion::trivial(), ForcingNotion::chain(3), ForcingNotion::fork(), ForcingNotion::antichain(3)] {
            let mut rel = ForcingRelation::new(&p);
            for phi in sentences(&p) {
                let eq = star_equation(&p, &phi).unwrap();
                assert_eq!(rel.forces(&phi).unwrap(), rel.forces(&eq).unwrap(), "{phi:?}");
            }
        }
    }

    #[test]
    fn passes_preserve_forcing() {
        let p = ForcingNotion::fork();
        let mut rel = ForcingRelation::new(&p);
        for phi in sentences(&p) {
            let want = rel.forces(&phi).unwrap();
            let f1 = eliminate_g(&p, &phi).unwrap();
            assert_eq!(rel.forces(&f1).unwrap(), want);
            let f2 = push_negations(&f1).unwrap();
            assert_eq!(rel.forces(&f2).unwrap(), want);
            let f3 = eliminate_negated_atoms(&f2).unwrap();
            assert_eq!(rel.forces(&f3).unwrap(), want);
            let f4 = eliminate_positive_atoms(&p, &f3).unwrap();
            assert_eq!(rel.forces(&f4).unwrap(), want);
        }
    }

    #[test]
    fn quantifiers_are_refused() {
        let p = ForcingNotion::trivial();
        let f = Formula::forall(vec![crate::formula::Var::from("x")], Formula::truth());
        assert!(star_translate(&p, &f).is_err());
    }
}
