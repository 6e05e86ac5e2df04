//! Injective coding of formulas, terms, names and valuations as HF sets.
//!
//! Every constructor is a Kuratowski pair `⟨tag, payload⟩` with the tag an
//! Ackermann-coded natural. Lists are right-nested pairs ending in `∅`;
//! variables are lists of their bytes. A valuation is the set of pairs
//! `⟨code(v), value⟩`, one per variable.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::formula::{Formula, Kind, Term, Var};
use crate::hfset::HFSet;
use crate::names::PName;

mod tag {
    pub const EQ: u64 = 0;
    pub const IN: u64 = 1;
    pub const IN_CLASS: u64 = 2;
    pub const IN_G: u64 = 3;
    pub const TR: u64 = 4;
    pub const NOT: u64 = 5;
    pub const AND: u64 = 6;
    pub const OR: u64 = 7;
    pub const FORALL: u64 = 8;
    pub const EXISTS: u64 = 9;

    pub const VAR: u64 = 0;
    pub const GROUND: u64 = 1;
    pub const NAME: u64 = 2;
    pub const PAIR: u64 = 3;
}

pub type Valuation = BTreeMap<Var, HFSet>;

fn tagged(t: u64, payload: HFSet) -> HFSet {
    HFSet::kpair(HFSet::ack(t), payload)
}

fn untag(x: &HFSet) -> Option<(u64, HFSet)> {
    let (t, p) = x.as_kpair()?;
    Some((t.as_ack()?, p))
}

pub fn encode_list<I: IntoIterator<Item = HFSet>>(items: I) -> HFSet
where
    I::IntoIter: DoubleEndedIterator,
{
    items
        .into_iter()
        .rev()
        .fold(HFSet::empty(), |tail, head| HFSet::kpair(head, tail))
}

pub fn decode_list(x: &HFSet) -> Option<Vec<HFSet>> {
    let mut out = Vec::new();
    let mut cur = x.clone();
    while !cur.is_empty() {
        let (h, t) = cur.as_kpair()?;
        out.push(h);
        cur = t;
    }
    Some(out)
}

pub fn encode_var(v: &str) -> HFSet {
    encode_list(v.bytes().map(|b| HFSet::ack(b as u64)).collect::<Vec<_>>())
}

pub fn decode_var(x: &HFSet) -> Option<Var> {
    let bytes: Option<Vec<u8>> = decode_list(x)?
        .iter()
        .map(|b| b.as_ack().filter(|&n| n < 256).map(|n| n as u8))
        .collect();
    let s = String::from_utf8(bytes?).ok()?;
    Some(Var::from(s.as_str()))
}

/// `{⟨code(ρ), r⟩ : ⟨ρ, r⟩ ∈ σ}` with conditions as von Neumann naturals.
pub fn encode_name(sigma: &PName) -> HFSet {
    HFSet::make(
        sigma
            .entries()
            .iter()
            .map(|(rho, r)| HFSet::kpair(encode_name(rho), HFSet::nat(*r)))
            .collect::<Vec<_>>(),
    )
}

pub fn decode_name(x: &HFSet) -> Option<PName> {
    let mut entries = Vec::with_capacity(x.len());
    for e in x.children() {
        let (n, r) = e.as_kpair()?;
        entries.push((decode_name(&n)?, r.as_nat()?));
    }
    Some(PName::new(entries))
}

pub fn encode_term(t: &Term) -> HFSet {
    match t {
        Term::Var(v) => tagged(tag::VAR, encode_var(v)),
        Term::Ground(x) => tagged(tag::GROUND, x.clone()),
        Term::Name(n) => tagged(tag::NAME, encode_name(n)),
        Term::Pair(a, b) => tagged(tag::PAIR, HFSet::kpair(encode_term(a), encode_term(b))),
    }
}

pub fn decode_term(x: &HFSet) -> Option<Term> {
    let (t, p) = untag(x)?;
    Some(match t {
        tag::VAR => Term::Var(decode_var(&p)?),
        tag::GROUND => Term::Ground(p),
        tag::NAME => Term::Name(decode_name(&p)?),
        tag::PAIR => {
            let (a, b) = p.as_kpair()?;
            Term::Pair(alloc::boxed::Box::new(decode_term(&a)?), alloc::boxed::Box::new(decode_term(&b)?))
        }
        _ => return None,
    })
}

/// Memoizing encoder; formulas are DAGs and codes share structure the same way.
#[derive(Debug, Default)]
pub struct Coder {
    memo: HashMap<Formula, HFSet>,
}

impl Coder {
    pub fn encode(&mut self, f: &Formula) -> HFSet {
        if let Some(x) = self.memo.get(f) {
            return x.clone();
        }
        let x = match f.kind() {
            Kind::Eq(a, b) => tagged(tag::EQ, HFSet::kpair(encode_term(a), encode_term(b))),
            Kind::In(a, b) => tagged(tag::IN, HFSet::kpair(encode_term(a), encode_term(b))),
            Kind::InClass(a, c) => tagged(tag::IN_CLASS, HFSet::kpair(encode_term(a), encode_var(c))),
            Kind::InG(a) => tagged(tag::IN_G, encode_term(a)),
            Kind::Tr(a, b, c) => tagged(
                tag::TR,
                encode_list([encode_term(a), encode_term(b), encode_term(c)]),
            ),
            Kind::Not(g) => tagged(tag::NOT, self.encode(g)),
            Kind::And(gs) => tagged(tag::AND, self.encode_all(gs)),
            Kind::Or(gs) => tagged(tag::OR, self.encode_all(gs)),
            Kind::Forall(vs, g) => tagged(tag::FORALL, self.encode_block(vs, g)),
            Kind::Exists(vs, g) => tagged(tag::EXISTS, self.encode_block(vs, g)),
        };
        self.memo.insert(f.clone(), x.clone());
        x
    }

    fn encode_all(&mut self, gs: &[Formula]) -> HFSet {
        let codes: Vec<HFSet> = gs.iter().map(|g| self.encode(g)).collect();
        encode_list(codes)
    }

    fn encode_block(&mut self, vs: &[Var], g: &Formula) -> HFSet {
        let vars = encode_list(vs.iter().map(|v| encode_var(v)).collect::<Vec<_>>());
        HFSet::kpair(vars, self.encode(g))
    }
}

pub fn encode_formula(f: &Formula) -> HFSet {
    Coder::default().encode(f)
}

pub fn decode_formula(x: &HFSet) -> Option<Formula> {
    let (t, p) = untag(x)?;
    let two = |p: &HFSet| -> Option<(Term, Term)> {
        let (a, b) = p.as_kpair()?;
        Some((decode_term(&a)?, decode_term(&b)?))
    };
    let many = |p: &HFSet| -> Option<Vec<Formula>> { decode_list(p)?.iter().map(decode_formula).collect() };
    let block = |p: &HFSet| -> Option<(Vec<Var>, Formula)> {
        let (vs, g) = p.as_kpair()?;
        let vs: Option<Vec<Var>> = decode_list(&vs)?.iter().map(decode_var).collect();
        Some((vs?, decode_formula(&g)?))
    };
    Some(match t {
        tag::EQ => {
            let (a, b) = two(&p)?;
            Formula::eq(a, b)
        }
        tag::IN => {
            let (a, b) = two(&p)?;
            Formula::mem(a, b)
        }
        tag::IN_CLASS => {
            let (a, c) = p.as_kpair()?;
            Formula::in_class(decode_term(&a)?, &decode_var(&c)?)
        }
        tag::IN_G => Formula::in_g(decode_term(&p)?),
        tag::TR => {
            let ts = decode_list(&p)?;
            if ts.len() != 3 {
                return None;
            }
            Formula::tr(decode_term(&ts[0])?, decode_term(&ts[1])?, decode_term(&ts[2])?)
        }
        tag::NOT => Formula::not(decode_formula(&p)?),
        tag::AND => Formula::and(many(&p)?),
        tag::OR => Formula::or(many(&p)?),
        tag::FORALL => {
            let (vs, g) = block(&p)?;
            Formula::forall(vs, g)
        }
        tag::EXISTS => {
            let (vs, g) = block(&p)?;
            Formula::exists(vs, g)
        }
        _ => return None,
    })
}

pub fn encode_valuation(v: &Valuation) -> HFSet {
    HFSet::make(
        v.iter()
            .map(|(k, x)| HFSet::kpair(encode_var(k), x.clone()))
            .collect::<Vec<_>>(),
    )
}

/// Total-or-nothing: every element must be a pair with a variable code on the
/// left, and no variable may appear twice.
pub fn decode_valuation(x: &HFSet) -> Option<Valuation> {
    let mut out = Valuation::new();
    for e in x.children() {
        let (k, val) = e.as_kpair()?;
        if out.insert(decode_var(&k)?, val).is_some() {
            return None;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::check_name;
    use alloc::vec;

    fn sample() -> Vec<Formula> {
        let x = Term::var("x");
        let y = Term::var("y");
        let e = Term::Ground(HFSet::empty());
        vec![
            Formula::eq(x.clone(), y.clone()),
            Formula::mem(x.clone(), e.clone()),
            Formula::in_class(x.clone(), "A"),
            Formula::forall(vec![Var::from("x")], Formula::not(Formula::mem(x.clone(), x.clone()))),
            Formula::exists(vec![Var::from("x"), Var::from("y")], Formula::or(vec![])),
            Formula::and(vec![Formula::tr(x.clone(), y.clone(), e.clone()), Formula::truth()]),
            Formula::in_g(Term::Name(check_name(&HFSet::nat(2)))),
            Formula::eq(Term::Pair(Box::new(x.clone()), Box::new(e)), y),
        ]
    }

    #[test]
    fn formulas_round_trip() {
        let fs = sample();
        let codes: Vec<HFSet> = fs.iter().map(encode_formula).collect();
        for (f, c) in fs.iter().zip(&codes) {
            assert_eq!(decode_formula(c).as_ref(), Some(f));
        }
        for i in 0..codes.len() {
            for j in 0..i {
                assert_ne!(codes[i], codes[j]);
            }
        }
    }

    #[test]
    fn codes_are_not_small_sets() {
        // Nothing in V_3 decodes as a formula.
        for x in crate::hfset::v_stage(3).unwrap() {
            assert!(decode_formula(&x).is_none());
        }
    }

    #[test]
    fn valuations_round_trip() {
        let mut v = Valuation::new();
        v.insert(Var::from("x"), HFSet::nat(1));
        v.insert(Var::from("yy"), HFSet::empty());
        assert_eq!(decode_valuation(&encode_valuation(&v)), Some(v));
        assert_eq!(decode_valuation(&HFSet::empty()), Some(Valuation::new()));
        assert_eq!(decode_valuation(&HFSet::nat(2)), None);
    }

    #[test]
    fn names_round_trip() {
        let n = check_name(&HFSet::nat(3)).with_entry(PName::empty(), 4);
        assert_eq!(decode_name(&encode_name(&n)), Some(n));
    }
}
