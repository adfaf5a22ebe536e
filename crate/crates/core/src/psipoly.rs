//! Exact polynomials in the Serre-Tate slots `Psi_i^{phi_mu}` and a small
//! expression language for relations between Kodaira-Spencer forms.
//!
//! The indeterminates `c` and `p` are kept symbolic so that identities are
//! checked for every prime and every normalisation at once.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::words::Word;

/// An indeterminate of [`PsiPoly`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indet {
    C,
    P,
    /// `log(1+T)`; only used by the independent expansion route.
    L,
    /// `Psi_i^{phi_mu}`.
    Psi(u8, Word),
    /// `beta^{phi_mu}` for the canonical-lift values.
    Beta(Word),
}

impl fmt::Display for Indet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indet::C => write!(f, "c"),
            Indet::P => write!(f, "p"),
            Indet::L => write!(f, "L"),
            Indet::Psi(i, w) if w.is_empty() => write!(f, "Psi{i}"),
            Indet::Psi(i, w) => write!(f, "Psi{i}^{{phi{w}}}"),
            Indet::Beta(w) if w.is_empty() => write!(f, "beta"),
            Indet::Beta(w) => write!(f, "beta^{{phi{w}}}"),
        }
    }
}

/// Sorted list of `(indeterminate, exponent)` with positive exponents.
pub type PsiMono = Vec<(Indet, u32)>;

fn mono_mul(a: &PsiMono, b: &PsiMono) -> PsiMono {
    let mut m: BTreeMap<Indet, u32> = a.iter().cloned().collect();
    for (x, e) in b {
        *m.entry(x.clone()).or_insert(0) += e;
    }
    m.into_iter().collect()
}

/// Polynomial with rational coefficients in the [`Indet`] variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PsiPoly {
    pub terms: BTreeMap<PsiMono, BigRational>,
}

impl PsiPoly {
    pub fn zero() -> PsiPoly {
        PsiPoly::default()
    }

    pub fn constant(q: BigRational) -> PsiPoly {
        let mut r = PsiPoly::zero();
        r.add_term(Vec::new(), q);
        r
    }

    pub fn int(n: i64) -> PsiPoly {
        PsiPoly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(x: Indet) -> PsiPoly {
        let mut r = PsiPoly::zero();
        r.add_term(vec![(x, 1)], BigRational::one());
        r
    }

    pub fn c() -> PsiPoly {
        PsiPoly::var(Indet::C)
    }

    pub fn p() -> PsiPoly {
        PsiPoly::var(Indet::P)
    }

    /// `Psi_i^{phi_mu}`, with `mu` given as a string of letters.
    pub fn psi(i: u8, mu: &str) -> PsiPoly {
        PsiPoly::var(Indet::Psi(i, Word::parse(mu).expect("static word")))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: PsiMono, q: BigRational) {
        if q.is_zero() {
            return;
        }
        let v = match self.terms.remove(&m) {
            Some(old) => old + q,
            None => q,
        };
        if !v.is_zero() {
            self.terms.insert(m, v);
        }
    }

    pub fn add(&self, o: &PsiPoly) -> PsiPoly {
        let mut r = self.clone();
        for (m, q) in &o.terms {
            r.add_term(m.clone(), q.clone());
        }
        r
    }

    pub fn neg(&self) -> PsiPoly {
        PsiPoly { terms: self.terms.iter().map(|(m, q)| (m.clone(), -q)).collect() }
    }

    pub fn sub(&self, o: &PsiPoly) -> PsiPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &PsiPoly) -> PsiPoly {
        let mut r = PsiPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.add_term(mono_mul(a, b), x * y);
            }
        }
        r
    }

    pub fn pow(&self, n: u32) -> PsiPoly {
        let mut r = PsiPoly::int(1);
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    pub fn scale(&self, q: &BigRational) -> PsiPoly {
        let mut r = PsiPoly::zero();
        for (m, x) in &self.terms {
            r.add_term(m.clone(), x * q);
        }
        r
    }

    /// Replace every indeterminate by a polynomial.
    pub fn substitute<F: Fn(&Indet) -> PsiPoly>(&self, img: F) -> PsiPoly {
        let mut cache: BTreeMap<Indet, PsiPoly> = BTreeMap::new();
        let mut r = PsiPoly::zero();
        for (m, q) in &self.terms {
            let mut t = PsiPoly::constant(q.clone());
            for (x, e) in m {
                let base = cache.entry(x.clone()).or_insert_with(|| img(x)).clone();
                t = t.mul(&base.pow(*e));
            }
            r = r.add(&t);
        }
        r
    }

    /// The Frobenius `phi_j`: `Psi_i^{phi_mu} -> Psi_i^{phi_{j mu}}`, likewise
    /// for `beta`, `L -> p Psi_j + p L`, and `c`, `p` fixed.
    pub fn phi(&self, j: u8) -> PsiPoly {
        self.substitute(|x| match x {
            Indet::Psi(i, w) => PsiPoly::var(Indet::Psi(*i, w.prepend(j))),
            Indet::Beta(w) => PsiPoly::var(Indet::Beta(w.prepend(j))),
            Indet::L => PsiPoly::p().mul(&PsiPoly::var(Indet::Psi(j, Word::empty())).add(&PsiPoly::var(Indet::L))),
            other => PsiPoly::var(other.clone()),
        })
    }

    pub fn degree_in(&self, x: &Indet) -> Vec<u32> {
        let mut ds: Vec<u32> =
            self.terms.keys().map(|m| m.iter().find(|(y, _)| y == x).map(|(_, e)| *e).unwrap_or(0)).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }

    /// Substitute an integer for `p`.
    pub fn at_prime(&self, p: u64) -> PsiPoly {
        let pp = PsiPoly::int(p as i64);
        self.substitute(|x| if *x == Indet::P { pp.clone() } else { PsiPoly::var(x.clone()) })
    }

    /// Lowest monomial, used as a counterexample witness.
    pub fn leading_term(&self) -> Option<String> {
        self.terms.iter().next().map(|(m, q)| fmt_term(m, q))
    }
}

fn fmt_term(m: &PsiMono, q: &BigRational) -> String {
    let mut s = String::new();
    let one = q.abs().is_one();
    if !one || m.is_empty() {
        s.push_str(&q.abs().to_string());
    }
    for (x, e) in m {
        if !s.is_empty() {
            s.push('*');
        }
        if *e == 1 {
            s.push_str(&x.to_string());
        } else {
            s.push_str(&format!("({x})^{e}"));
        }
    }
    s
}

impl fmt::Display for PsiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}", fmt_term(m, q))?;
        }
        Ok(())
    }
}

/// A Kodaira-Spencer form appearing in a relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FormId {
    /// `f_mu`.
    Single(Word),
    /// `f_{mu,nu}`.
    Pair(Word, Word),
    /// `f_{i,d}`, the form attached to the Serre operator.
    Partial(u8),
}

impl FormId {
    pub fn swap12(&self) -> FormId {
        match self {
            FormId::Single(w) => FormId::Single(w.swap12()),
            FormId::Pair(a, b) => FormId::Pair(a.swap12(), b.swap12()),
            FormId::Partial(i) => FormId::Partial(3 - i),
        }
    }

    /// Parse `f12`, `f{11,1}`, `f{2,d}` (the leading `f` is optional).
    pub fn parse(s: &str) -> Result<FormId> {
        let s = s.trim();
        let s = s.strip_prefix('f').unwrap_or(s);
        let s = s.strip_prefix('_').unwrap_or(s);
        if let Some(inner) = s.strip_prefix('{').and_then(|x| x.strip_suffix('}')) {
            let (a, b) = inner.split_once(',').ok_or_else(|| Error::Parse(format!("form f{{{inner}}}")))?;
            let (a, b) = (a.trim(), b.trim());
            if b == "d" {
                let i: u8 = a.parse().map_err(|_| Error::Parse(format!("direction {a}")))?;
                if !(1..=2).contains(&i) {
                    return Err(Error::UnknownForm(format!("f{{{a},d}}")));
                }
                return Ok(FormId::Partial(i));
            }
            return Ok(FormId::Pair(Word::parse(a)?, Word::parse(b)?));
        }
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("form f{s}")));
        }
        Ok(FormId::Single(Word::parse(s)?))
    }
}

impl fmt::Display for FormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormId::Single(w) => write!(f, "f{w}"),
            FormId::Pair(a, b) => write!(f, "f{{{a},{b}}}"),
            FormId::Partial(i) => write!(f, "f{{{i},d}}"),
        }
    }
}

/// Syntax tree of a relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Num(BigInt),
    P,
    C,
    Form(FormId),
    Phi(u8, Box<Expr>),
    Pow(Box<Expr>, u32),
    Mul(Vec<Expr>),
    /// Signed summands; `true` means subtracted.
    Sum(Vec<(bool, Expr)>),
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr> {
        let toks = tokenize(s)?;
        let mut ps = Parser { toks, pos: 0 };
        let e = ps.expr()?;
        if ps.pos != ps.toks.len() {
            return Err(Error::Parse(format!("trailing input in {s:?}")));
        }
        Ok(e)
    }

    /// Exchange the directions 1 and 2 everywhere.
    pub fn swap12(&self) -> Expr {
        match self {
            Expr::Form(f) => Expr::Form(f.swap12()),
            Expr::Phi(j, e) => Expr::Phi(3 - j, Box::new(e.swap12())),
            Expr::Pow(e, n) => Expr::Pow(Box::new(e.swap12()), *n),
            Expr::Mul(v) => Expr::Mul(v.iter().map(Expr::swap12).collect()),
            Expr::Sum(v) => Expr::Sum(v.iter().map(|(s, e)| (*s, e.swap12())).collect()),
            other => other.clone(),
        }
    }

    /// Top-level summands with their signs.
    pub fn summands(&self) -> Vec<(bool, Expr)> {
        match self {
            Expr::Sum(v) => v.clone(),
            other => vec![(false, other.clone())],
        }
    }

    /// Flip the sign of the last top-level summand.
    pub fn mutate(&self) -> Expr {
        let mut v = self.summands();
        if let Some(last) = v.last_mut() {
            last.0 = !last.0;
        }
        Expr::Sum(v)
    }

    /// Every form occurring in the expression.
    pub fn forms(&self) -> Vec<FormId> {
        let mut out = Vec::new();
        self.collect_forms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_forms(&self, out: &mut Vec<FormId>) {
        match self {
            Expr::Form(f) => out.push(f.clone()),
            Expr::Phi(_, e) | Expr::Pow(e, _) => e.collect_forms(out),
            Expr::Mul(v) => v.iter().for_each(|e| e.collect_forms(out)),
            Expr::Sum(v) => v.iter().for_each(|(_, e)| e.collect_forms(out)),
            _ => {}
        }
    }

    /// Evaluate with a value for every form. Frobenius twists of forms are
    /// applied to their values, which is valid because the expansion maps
    /// commute with every `phi_j`.
    pub fn eval<F: Fn(&FormId) -> Result<PsiPoly>>(&self, form: &F) -> Result<PsiPoly> {
        Ok(match self {
            Expr::Num(n) => PsiPoly::constant(BigRational::from_integer(n.clone())),
            Expr::P => PsiPoly::p(),
            Expr::C => PsiPoly::c(),
            Expr::Form(f) => form(f)?,
            Expr::Phi(j, e) => e.eval(form)?.phi(*j),
            Expr::Pow(e, n) => e.eval(form)?.pow(*n),
            Expr::Mul(v) => {
                let mut r = PsiPoly::int(1);
                for e in v {
                    r = r.mul(&e.eval(form)?);
                }
                r
            }
            Expr::Sum(v) => {
                let mut r = PsiPoly::zero();
                for (neg, e) in v {
                    let x = e.eval(form)?;
                    r = if *neg { r.sub(&x) } else { r.add(&x) };
                }
                r
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Form(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let ch = cs[i];
        match ch {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            d if d.is_ascii_digit() => {
                let st = i;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let n: String = cs[st..i].iter().collect();
                out.push(Tok::Num(n.parse().expect("digits")));
            }
            'f' => {
                let st = i;
                i += 1;
                if i < cs.len() && cs[i] == '{' {
                    while i < cs.len() && cs[i] != '}' {
                        i += 1;
                    }
                    if i == cs.len() {
                        return Err(Error::Parse("unterminated f{".into()));
                    }
                    i += 1;
                } else {
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push(Tok::Form(cs[st..i].iter().collect()));
            }
            a if a.is_ascii_alphabetic() => {
                let st = i;
                while i < cs.len() && cs[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push(Tok::Ident(cs[st..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(x) if x == t => Ok(()),
            other => Err(Error::Parse(format!("expected {t:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut v = Vec::new();
        let mut neg = false;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            neg = true;
        }
        v.push((neg, self.term()?));
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    v.push((false, self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    v.push((true, self.term()?));
                }
                _ => break,
            }
        }
        if v.len() == 1 && !v[0].0 {
            return Ok(v.pop().expect("one summand").1);
        }
        Ok(Expr::Sum(v))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut v = vec![self.factor()?];
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            v.push(self.factor()?);
        }
        if v.len() == 1 {
            return Ok(v.pop().expect("one factor"));
        }
        Ok(Expr::Mul(v))
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Num(n)) => {
                    let e: u32 = n.try_into().map_err(|_| Error::Parse("exponent too large".into()))?;
                    return Ok(Expr::Pow(Box::new(base), e));
                }
                other => return Err(Error::Parse(format!("expected exponent, found {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Form(s)) => Ok(Expr::Form(FormId::parse(&s)?)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "p" => Ok(Expr::P),
                "c" => Ok(Expr::C),
                _ if s.starts_with("phi") => {
                    let j: u8 = s[3..].parse().map_err(|_| Error::Parse(format!("operator {s}")))?;
                    if !(1..=2).contains(&j) {
                        return Err(Error::Parse(format!("operator {s}")));
                    }
                    self.expect(Tok::LParen)?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Phi(j, Box::new(e)))
                }
                _ => Err(Error::Parse(format!("unknown symbol {s}"))),
            },
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}
