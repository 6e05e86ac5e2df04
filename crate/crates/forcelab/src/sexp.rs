//! S-expression syntax for sets, names, formulas and notions.
//!
//! ```text
//! hf      := (hf hf*)
//! name    := (entry*)         entry := (name cond)
//! term    := (var x) | (const hf) | (name name) | (op term term)
//! formula := (= t t) | (in t t) | (in-class t A) | (in-G t) | (tr t t t)
//!          | (not f) | (and f*) | (or f*) | (forall (x*) f) | (exists (x*) f)
//! poset   := (poset (conds label*) (le (label label)*))
//! ```
//!
//! Comments run from `;` to the end of the line.

use std::fmt::{self, Write as _};

use forcelab_core::formula::{Formula, Kind, Term, Var};
use forcelab_core::hfset::HFSet;
use forcelab_core::names::PName;
use forcelab_core::poset::ForcingNotion;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn list(&self, what: &str) -> Result<&[Sexp], ParseError> {
        match self {
            Sexp::List(xs, _) => Ok(xs),
            Sexp::Atom(a, p) => err(*p, format!("expected {what}, found atom `{a}`")),
        }
    }

    fn atom(&self, what: &str) -> Result<&str, ParseError> {
        match self {
            Sexp::Atom(a, _) => Ok(a),
            Sexp::List(_, p) => err(*p, format!("expected {what}, found a list")),
        }
    }

    /// `(head args...)`
    fn form(&self, what: &str) -> Result<(&str, &[Sexp]), ParseError> {
        match self.list(what)? {
            [head, rest @ ..] => Ok((head.atom(what)?, rest)),
            [] => err(self.pos(), format!("expected {what}, found ()")),
        }
    }
}

/// Reads every top-level expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 0);
    let mut chars = text.chars().peekable();
    let mut atom: Option<(String, Pos)> = None;
    let finish = |atom: &mut Option<(String, Pos)>, stack: &mut Vec<(Vec<Sexp>, Pos)>, out: &mut Vec<Sexp>| {
        if let Some((a, p)) = atom.take() {
            match stack.last_mut() {
                Some((xs, _)) => xs.push(Sexp::Atom(a, p)),
                None => out.push(Sexp::Atom(a, p)),
            }
        }
    };
    while let Some(c) = chars.next() {
        col += 1;
        let here = Pos { line, col };
        match c {
            ';' => {
                finish(&mut atom, &mut stack, &mut out);
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '\n' => {
                finish(&mut atom, &mut stack, &mut out);
                line += 1;
                col = 0;
            }
            c if c.is_whitespace() => finish(&mut atom, &mut stack, &mut out),
            '(' => {
                finish(&mut atom, &mut stack, &mut out);
                stack.push((Vec::new(), here));
            }
            ')' => {
                finish(&mut atom, &mut stack, &mut out);
                let Some((xs, p)) = stack.pop() else {
                    return err(here, "unbalanced `)`");
                };
                match stack.last_mut() {
                    Some((ys, _)) => ys.push(Sexp::List(xs, p)),
                    None => out.push(Sexp::List(xs, p)),
                }
            }
            c => match &mut atom {
                Some((a, _)) => a.push(c),
                None => atom = Some((c.to_string(), here)),
            },
        }
    }
    finish(&mut atom, &mut stack, &mut out);
    if let Some((_, p)) = stack.last() {
        return err(p.to_owned(), "unclosed `(`");
    }
    Ok(out)
}

fn read_one(text: &str, what: &str) -> Result<Sexp, ParseError> {
    let mut xs = read_all(text)?;
    match xs.len() {
        1 => Ok(xs.pop().unwrap()),
        0 => err(Pos { line: 1, col: 1 }, format!("expected {what}, found nothing")),
        _ => err(xs[1].pos(), format!("expected a single {what}")),
    }
}

fn arity(s: &Sexp, head: &str, args: &[Sexp], n: usize) -> Result<(), ParseError> {
    if args.len() == n {
        Ok(())
    } else {
        err(s.pos(), format!("`{head}` takes {n} argument(s), found {}", args.len()))
    }
}

pub fn hf_from(s: &Sexp) -> Result<HFSet, ParseError> {
    let (head, args) = s.form("a set")?;
    if head != "hf" {
        return err(s.pos(), format!("expected (hf ...), found ({head} ...)"));
    }
    Ok(HFSet::make(args.iter().map(hf_from).collect::<Result<Vec<_>, _>>()?))
}

pub fn name_from(s: &Sexp) -> Result<PName, ParseError> {
    let mut entries = Vec::new();
    for e in s.list("a name")? {
        match e.list("a name entry")? {
            [sigma, p] => {
                let q = p.atom("a condition")?;
                let q = q
                    .parse::<usize>()
                    .or_else(|_| err(p.pos(), format!("condition `{q}` is not an index")))?;
                entries.push((name_from(sigma)?, q));
            }
            _ => return err(e.pos(), "a name entry is (name condition)"),
        }
    }
    Ok(PName::new(entries))
}

pub fn term_from(s: &Sexp) -> Result<Term, ParseError> {
    let (head, args) = s.form("a term")?;
    match head {
        "var" => {
            arity(s, head, args, 1)?;
            Ok(Term::Var(Var::from(args[0].atom("a variable")?)))
        }
        "const" => {
            arity(s, head, args, 1)?;
            Ok(Term::Ground(hf_from(&args[0])?))
        }
        "name" => {
            arity(s, head, args, 1)?;
            Ok(Term::Name(name_from(&args[0])?))
        }
        "op" => {
            arity(s, head, args, 2)?;
            Ok(Term::pair(term_from(&args[0])?, term_from(&args[1])?))
        }
        _ => err(s.pos(), format!("unknown term `{head}`")),
    }
}

fn vars_from(s: &Sexp) -> Result<Vec<Var>, ParseError> {
    s.list("a variable list")?
        .iter()
        .map(|v| v.atom("a variable").map(Var::from))
        .collect()
}

pub fn formula_from(s: &Sexp) -> Result<Formula, ParseError> {
    let (head, args) = s.form("a formula")?;
    let terms = |n: usize| -> Result<Vec<Term>, ParseError> {
        arity(s, head, args, n)?;
        args.iter().map(term_from).collect()
    };
    let subs = || -> Result<Vec<Formula>, ParseError> { args.iter().map(formula_from).collect() };
    Ok(match head {
        "=" => {
            let t = terms(2)?;
            Formula::eq(t[0].clone(), t[1].clone())
        }
        "in" => {
            let t = terms(2)?;
            Formula::mem(t[0].clone(), t[1].clone())
        }
        "in-class" => {
            arity(s, head, args, 2)?;
            Formula::in_class(term_from(&args[0])?, args[1].atom("a class")?)
        }
        "in-G" => Formula::in_g(terms(1)?.remove(0)),
        "tr" => {
            let t = terms(3)?;
            Formula::tr(t[0].clone(), t[1].clone(), t[2].clone())
        }
        "not" => {
            arity(s, head, args, 1)?;
            Formula::not(formula_from(&args[0])?)
        }
        "and" => Formula::and(subs()?),
        "or" => Formula::or(subs()?),
        "forall" | "exists" => {
            arity(s, head, args, 2)?;
            let vs = vars_from(&args[0])?;
            let body = formula_from(&args[1])?;
            if head == "forall" {
                Formula::forall(vs, body)
            } else {
                Formula::exists(vs, body)
            }
        }
        _ => return err(s.pos(), format!("unknown formula `{head}`")),
    })
}

/// `(poset (conds 1 a b) (le (a 1) (b 1)))`; the first label is the top.
pub fn notion_from(s: &Sexp) -> Result<ForcingNotion, ParseError> {
    let (head, args) = s.form("a poset")?;
    if head != "poset" {
        return err(s.pos(), format!("expected (poset ...), found ({head} ...)"));
    }
    let mut labels: Option<Vec<String>> = None;
    let mut pairs = Vec::new();
    for part in args {
        let (h, xs) = part.form("a poset clause")?;
        match h {
            "conds" => {
                labels = Some(xs.iter().map(|x| x.atom("a label").map(str::to_string)).collect::<Result<_, _>>()?);
            }
            "le" => pairs.extend(xs.iter().cloned()),
            _ => return err(part.pos(), format!("unknown poset clause `{h}`")),
        }
    }
    let Some(labels) = labels else {
        return err(s.pos(), "poset without (conds ...)");
    };
    let index = |x: &Sexp| -> Result<usize, ParseError> {
        let l = x.atom("a label")?;
        labels
            .iter()
            .position(|m| m == l)
            .map_or_else(|| err(x.pos(), format!("unknown condition `{l}`")), Ok)
    };
    let mut le = Vec::new();
    for p in &pairs {
        match p.list("a pair")? {
            [a, b] => le.push((index(a)?, index(b)?)),
            _ => return err(p.pos(), "an order pair is (lower upper)"),
        }
    }
    ForcingNotion::from_generators(labels, &le).or_else(|e| err(s.pos(), e.to_string()))
}

pub fn parse_hf(text: &str) -> Result<HFSet, ParseError> {
    hf_from(&read_one(text, "set")?)
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    formula_from(&read_one(text, "formula")?)
}

pub fn parse_formulas(text: &str) -> Result<Vec<Formula>, ParseError> {
    read_all(text)?.iter().map(formula_from).collect()
}

pub fn parse_names(text: &str) -> Result<Vec<PName>, ParseError> {
    read_all(text)?.iter().map(name_from).collect()
}

pub fn parse_notion(text: &str) -> Result<ForcingNotion, ParseError> {
    notion_from(&read_one(text, "poset")?)
}

pub fn print_hf(x: &HFSet) -> String {
    let mut s = String::new();
    write_hf(&mut s, x);
    s
}

fn write_hf(s: &mut String, x: &HFSet) {
    s.push_str("(hf");
    for c in x.children() {
        s.push(' ');
        write_hf(s, c);
    }
    s.push(')');
}

pub fn print_name(n: &PName) -> String {
    let mut s = String::new();
    write_name(&mut s, n);
    s
}

fn write_name(s: &mut String, n: &PName) {
    s.push('(');
    for (i, (sigma, p)) in n.entries().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push('(');
        write_name(s, sigma);
        let _ = write!(s, " {p})");
    }
    s.push(')');
}

pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

fn write_term(s: &mut String, t: &Term) {
    match t {
        Term::Var(v) => {
            let _ = write!(s, "(var {v})");
        }
        Term::Ground(x) => {
            s.push_str("(const ");
            write_hf(s, x);
            s.push(')');
        }
        Term::Name(n) => {
            s.push_str("(name ");
            write_name(s, n);
            s.push(')');
        }
        Term::Pair(a, b) => {
            s.push_str("(op ");
            write_term(s, a);
            s.push(' ');
            write_term(s, b);
            s.push(')');
        }
    }
}

pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, f);
    s
}

fn write_formula(s: &mut String, f: &Formula) {
    let open = |s: &mut String, head: &str| {
        s.push('(');
        s.push_str(head);
    };
    let terms = |s: &mut String, ts: &[&Term]| {
        for t in ts {
            s.push(' ');
            write_term(s, t);
        }
        s.push(')');
    };
    match f.kind() {
        Kind::Eq(a, b) => {
            open(s, "=");
            terms(s, &[a, b]);
        }
        Kind::In(a, b) => {
            open(s, "in");
            terms(s, &[a, b]);
        }
        Kind::InClass(a, c) => {
            open(s, "in-class");
            s.push(' ');
            write_term(s, a);
            let _ = write!(s, " {c})");
        }
        Kind::InG(a) => {
            open(s, "in-G");
            terms(s, &[a]);
        }
        Kind::Tr(a, b, c) => {
            open(s, "tr");
            terms(s, &[a, b, c]);
        }
        Kind::Not(g) => {
            open(s, "not ");
            write_formula(s, g);
            s.push(')');
        }
        Kind::And(gs) | Kind::Or(gs) => {
            open(s, if matches!(f.kind(), Kind::And(_)) { "and" } else { "or" });
            for g in gs {
                s.push(' ');
                write_formula(s, g);
            }
            s.push(')');
        }
        Kind::Forall(vs, g) | Kind::Exists(vs, g) => {
            open(s, if matches!(f.kind(), Kind::Forall(..)) { "forall (" } else { "exists (" });
            let _ = write!(s, "{}) ", vs.iter().map(|v| &**v).collect::<Vec<_>>().join(" "));
            write_formula(s, g);
            s.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reads_the_basic_forms() {
        let f = parse_formula("(forall (x) (in (var x) (const (hf))))").unwrap();
        assert_eq!(
            f,
            Formula::forall(vec![Var::from("x")], Formula::mem(Term::var("x"), Term::Ground(HFSet::empty())))
        );
        assert_eq!(parse_formula("(and)").unwrap(), Formula::and(vec![]));
        assert_eq!(parse_hf("(hf (hf))").unwrap(), HFSet::nat(1));
        let n = parse_names("((() 1) (() 2)) ()").unwrap();
        assert_eq!(n[1], PName::empty());
        assert_eq!(n[0].len(), 2);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("(and\n  (in (var x)))").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
        assert!(e.msg.contains("2 argument"));
        assert_eq!(parse_formula("(and").unwrap_err().msg, "unclosed `(`");
        assert!(parse_formula("(nand)").unwrap_err().msg.contains("unknown formula"));
        assert!(parse_formula(")").is_err());
    }

    #[test]
    fn notions() {
        let p = parse_notion("(poset (conds 1 a b) (le (a 1) (b 1))) ; fork").unwrap();
        assert_eq!(p.le_pairs(), ForcingNotion::fork().le_pairs());
        assert!(parse_notion("(poset (conds 1 a) (le (a c)))").unwrap_err().msg.contains("unknown condition"));
    }

    fn random_hf(rng: &mut ChaCha8Rng, depth: usize) -> HFSet {
        let k = if depth == 0 { 0 } else { rng.gen_range(0..3) };
        HFSet::make((0..k).map(|_| random_hf(rng, depth - 1)))
    }

    fn random_name(rng: &mut ChaCha8Rng, depth: usize) -> PName {
        let k = if depth == 0 { 0 } else { rng.gen_range(0..3) };
        PName::new((0..k).map(|_| (random_name(rng, depth - 1), rng.gen_range(0..4))).collect::<Vec<_>>())
    }

    fn random_term(rng: &mut ChaCha8Rng) -> Term {
        match rng.gen_range(0..4) {
            0 => Term::var(["x", "y", "z"][rng.gen_range(0..3)]),
            1 => Term::Ground(random_hf(rng, 3)),
            2 => Term::Name(random_name(rng, 2)),
            _ => Term::pair(Term::var("x"), Term::Ground(random_hf(rng, 2))),
        }
    }

    fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
        let vs = |rng: &mut ChaCha8Rng| (0..rng.gen_range(0..3)).map(|i| Var::from(["x", "y"][i])).collect();
        match if depth == 0 { rng.gen_range(0..5) } else { rng.gen_range(0..10) } {
            0 => Formula::eq(random_term(rng), random_term(rng)),
            1 => Formula::mem(random_term(rng), random_term(rng)),
            2 => Formula::in_class(random_term(rng), "A"),
            3 => Formula::in_g(random_term(rng)),
            4 => Formula::tr(random_term(rng), random_term(rng), random_term(rng)),
            5 => Formula::not(random_formula(rng, depth - 1)),
            6 => Formula::and((0..rng.gen_range(0..4)).map(|_| random_formula(rng, depth - 1)).collect()),
            7 => Formula::or((0..rng.gen_range(0..4)).map(|_| random_formula(rng, depth - 1)).collect()),
            8 => Formula::forall(vs(rng), random_formula(rng, depth - 1)),
            _ => Formula::exists(vs(rng), random_formula(rng, depth - 1)),
        }
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let f = random_formula(&mut rng, 4);
            let text = print_formula(&f);
            let g = parse_formula(&text).unwrap();
            assert_eq!(g, f, "{text}");
            assert_eq!(print_formula(&g), text);
        }
    }
}
