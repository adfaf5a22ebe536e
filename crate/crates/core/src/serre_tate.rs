//! Serre-Tate expansions: the series `Psi_i`, the expansion table of the
//! Kodaira-Spencer forms in two directions, symbolic verification of the
//! relations between them, the delta-Serre operators, and the values of the
//! classes at a canonical-lift parameter `beta` in a ramified tower.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{JetElement, JetRing};
use crate::mpoly::MPoly;
use crate::psipoly::{Expr, FormId, Indet, PsiPoly};
use crate::symbol::FTable;
use crate::tower::{FrobeniusFamily, KElem, Tower, Valuation};
use crate::words::{nonempty_words_up_to, words_up_to, Word};

const CATALOG_SOURCE: &str = include_str!("../data/relations.txt");

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn p_pow(k: u32) -> PsiPoly {
    PsiPoly::p().pow(k)
}

fn check_form_words(ws: &[&Word]) -> Result<()> {
    for w in ws {
        if w.is_empty() || w.len() > 2 || w.letters().iter().any(|&l| l != 1 && l != 2) {
            return Err(Error::UnknownForm(format!("word '{w}'")));
        }
    }
    Ok(())
}

/// The expansion `E(f)` of a form in the slots `Psi_i^{phi_mu}`, as tabulated
/// for two directions and order at most two. Entries not listed are obtained
/// by exchanging the directions; reversed pairs are negated.
pub fn st_expansion(form: &FormId) -> Result<PsiPoly> {
    let c = PsiPoly::c();
    let p = PsiPoly::p();
    let s = |i: u8, mu: &str| PsiPoly::psi(i, mu);
    match form {
        FormId::Partial(i) if *i == 1 || *i == 2 => Ok(PsiPoly::int(1)),
        FormId::Partial(i) => Err(Error::UnknownForm(format!("f{{{i},d}}"))),
        FormId::Single(mu) => {
            check_form_words(&[mu])?;
            let l = mu.letters();
            let v = match l {
                [i] => s(*i, ""),
                [i, j] if i == j => s(*i, &i.to_string()).add(&p.mul(&s(*i, ""))),
                // f12 = c(Psi2^{phi1} + p Psi1), f21 = c(Psi1^{phi2} + p Psi2).
                [i, j] => s(*j, &i.to_string()).add(&p.mul(&s(*i, ""))),
                _ => unreachable!("checked length"),
            };
            Ok(c.mul(&v))
        }
        FormId::Pair(mu, nu) => {
            check_form_words(&[mu, nu])?;
            if mu == nu {
                return Err(Error::UnknownForm(format!("{form}")));
            }
            if let Some(v) = pair_table(mu, nu) {
                return Ok(c.mul(&v));
            }
            if let Some(v) = pair_table(nu, mu) {
                return Ok(c.mul(&v).neg());
            }
            let (a, b) = (mu.swap12(), nu.swap12());
            let swapped = pair_table(&a, &b).or_else(|| pair_table(&b, &a).map(|v| v.neg()));
            match swapped {
                Some(v) => Ok(c.mul(&swap_slots(&v))),
                None => Err(Error::UnknownForm(format!("{form}"))),
            }
        }
    }
}

/// The published pairs, without the factor `c`.
fn pair_table(mu: &Word, nu: &Word) -> Option<PsiPoly> {
    let p = PsiPoly::p();
    let s = |i: u8, w: &str| PsiPoly::psi(i, w);
    let key = (mu.to_string(), nu.to_string());
    let v = match (key.0.as_str(), key.1.as_str()) {
        ("1", "2") => p.mul(&s(1, "").sub(&s(2, ""))),
        ("11", "22") => p_pow(2).mul(&s(1, "1").add(&p.mul(&s(1, ""))).sub(&s(2, "2")).sub(&p.mul(&s(2, "")))),
        ("11", "1") => p.mul(&s(1, "1")),
        ("12", "1") => p.mul(&s(2, "1")),
        ("12", "21") => p_pow(2).mul(&s(2, "1").add(&p.mul(&s(1, ""))).sub(&s(1, "2")).sub(&p.mul(&s(2, "")))),
        ("11", "2") => p.mul(&s(1, "1").add(&p.mul(&s(1, ""))).sub(&p.mul(&s(2, "")))),
        ("11", "12") => p_pow(2).mul(&s(1, "1").sub(&s(2, "1"))),
        ("12", "2") => p.mul(&s(2, "1").add(&p.mul(&s(1, ""))).sub(&p.mul(&s(2, "")))),
        ("11", "21") => p_pow(2).mul(&s(1, "1").sub(&s(1, "2")).add(&p.mul(&s(1, ""))).sub(&p.mul(&s(2, "")))),
        _ => return None,
    };
    Some(v)
}

/// Exchange the directions in the slots: `Psi_i^{phi_mu} -> Psi_{3-i}^{phi_mu'}`.
pub fn swap_slots(f: &PsiPoly) -> PsiPoly {
    f.substitute(|x| match x {
        Indet::Psi(i, w) => PsiPoly::var(Indet::Psi(3 - i, w.swap12())),
        Indet::Beta(w) => PsiPoly::var(Indet::Beta(w.swap12())),
        other => PsiPoly::var(other.clone()),
    })
}

/// `phi_mu log(1+T)` written in the slots and `L = log(1+T)`, using
/// `phi_i L = p Psi_i + p L`.
fn phi_word_of_l(mu: &Word) -> PsiPoly {
    let mut x = PsiPoly::var(Indet::L);
    for &l in mu.letters().iter().rev() {
        x = x.phi(l);
    }
    x
}

/// Independent expansion from `theta(f_mu) = c(phi_mu - p^r)` and
/// `theta(f_{mu,nu}) = c(p^s phi_mu - p^r phi_nu)`, applied to `(1/p) log(1+T)`.
/// Used to cross-check the tabulated values; the result never involves `L`.
pub fn st_expansion_from_log(form: &FormId) -> Result<PsiPoly> {
    // Divide by the indeterminate p by removing one power from every term.
    let scale = |x: PsiPoly| -> Result<PsiPoly> {
        let mut out = PsiPoly::zero();
        for (m, qv) in &x.terms {
            let mut m = m.clone();
            let pos = m
                .iter()
                .position(|(v, _)| *v == Indet::P)
                .ok_or_else(|| Error::IntegralityViolation(format!("{form}: term without p")))?;
            if m[pos].1 == 1 {
                m.remove(pos);
            } else {
                m[pos].1 -= 1;
            }
            out = out.add(&PsiPoly { terms: [(m, qv.clone())].into_iter().collect() });
        }
        Ok(PsiPoly::c().mul(&out))
    };
    match form {
        FormId::Partial(_) => Err(Error::UnknownForm(format!("{form}: not a jet form"))),
        FormId::Single(mu) => {
            check_form_words(&[mu])?;
            let v = phi_word_of_l(mu).sub(&p_pow(mu.len() as u32).mul(&PsiPoly::var(Indet::L)));
            scale(v)
        }
        FormId::Pair(mu, nu) => {
            check_form_words(&[mu, nu])?;
            if mu == nu {
                return Err(Error::UnknownForm(format!("{form}")));
            }
            let v = p_pow(nu.len() as u32).mul(&phi_word_of_l(mu)).sub(&p_pow(mu.len() as u32).mul(&phi_word_of_l(nu)));
            scale(v)
        }
    }
}

/// Values at a canonical-lift parameter in the indeterminates `beta^{phi_mu}`,
/// with `c = 1`: `f_mu = beta^{phi_mu} - p^r beta`,
/// `f_{mu,nu} = p^s beta^{phi_mu} - p^r beta^{phi_nu}`.
pub fn beta_expansion(form: &FormId) -> Result<PsiPoly> {
    let b = |w: &Word| PsiPoly::var(Indet::Beta(w.clone()));
    match form {
        FormId::Partial(_) => Err(Error::UnknownForm(format!("{form}: no canonical-lift value"))),
        FormId::Single(mu) => {
            mu.validate(2)?;
            Ok(b(mu).sub(&p_pow(mu.len() as u32).mul(&b(&Word::empty()))))
        }
        FormId::Pair(mu, nu) => {
            if mu == nu {
                return Err(Error::DistinctWordsRequired);
            }
            Ok(p_pow(nu.len() as u32).mul(&b(mu)).sub(&p_pow(mu.len() as u32).mul(&b(nu))))
        }
    }
}

/// A named relation from the catalog.
#[derive(Clone, Debug)]
pub struct Relation {
    pub name: String,
    pub source: String,
    pub expr: Expr,
}

/// Parse a catalog in the `name: expression` line format; `#` starts a comment.
pub fn parse_catalog(src: &str) -> Result<Vec<Relation>> {
    let mut out = Vec::new();
    for line in src.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, body) = line.split_once(':').ok_or_else(|| Error::Parse(format!("missing ':' in {line:?}")))?;
        out.push(Relation { name: name.trim().to_string(), source: body.trim().to_string(), expr: Expr::parse(body)? });
    }
    Ok(out)
}

/// The built-in relation catalog.
pub fn relation_catalog() -> Vec<Relation> {
    parse_catalog(CATALOG_SOURCE).expect("built-in catalog parses")
}

/// Outcome of one relation check.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub relation: String,
    pub expression: String,
    /// `"zero polynomial"` or `"nonzero"`.
    pub status: String,
    pub residual: String,
    pub swapped_status: String,
    pub swapped_residual: String,
    /// Common degree in `c` of every summand.
    pub c_degree: u32,
    /// Vanishing with the canonical-lift values substituted; absent when the
    /// relation involves forms without such values.
    pub canonical_lift_route: Option<bool>,
    /// The sign-flipped relation leaves a nonzero residual.
    pub mutation_detected: bool,
    /// Numeric checks at specific primes, run only when the symbolic check fails.
    pub numeric_fallback: Vec<(u64, bool)>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        let symbolic = self.status == ZERO && self.swapped_status == ZERO;
        let fallback = !self.numeric_fallback.is_empty() && self.numeric_fallback.iter().all(|x| x.1);
        (symbolic || fallback) && self.mutation_detected && self.canonical_lift_route != Some(false)
    }
}

const ZERO: &str = "zero polynomial";

fn status_of(f: &PsiPoly) -> (String, String) {
    if f.is_zero() {
        (ZERO.to_string(), "0".to_string())
    } else {
        ("nonzero".to_string(), f.to_string())
    }
}

/// Common `c`-degree of the summands; `NotHomogeneous` if they differ.
fn c_degree(name: &str, e: &Expr) -> Result<u32> {
    let mut degs = Vec::new();
    for (_, s) in e.summands() {
        let v = s.eval(&st_expansion)?;
        degs.extend(v.degree_in(&Indet::C));
    }
    degs.sort_unstable();
    degs.dedup();
    match degs.as_slice() {
        [] => Ok(0),
        [d] => Ok(*d),
        _ => Err(Error::NotHomogeneous(name.to_string())),
    }
}

/// Verify one expression: substitute the expansions with `c` and `p`
/// indeterminate, reduce, and repeat for the swapped and mutated forms.
pub fn verify_expr(name: &str, source: &str, e: &Expr) -> Result<IdentityReport> {
    let c_deg = c_degree(name, e)?;
    let r = e.eval(&st_expansion)?;
    let rs = e.swap12().eval(&st_expansion)?;
    let mutated = e.mutate().eval(&st_expansion)?;
    let uses_partial = e.forms().iter().any(|f| matches!(f, FormId::Partial(_)));
    let canonical = if uses_partial {
        None
    } else {
        let b = e.eval(&beta_expansion)?;
        let bs = e.swap12().eval(&beta_expansion)?;
        Some(b.is_zero() && bs.is_zero())
    };
    let mut fallback = Vec::new();
    if !r.is_zero() || !rs.is_zero() {
        for p in [5u64, 7, 11] {
            fallback.push((p, r.at_prime(p).is_zero() && rs.at_prime(p).is_zero()));
        }
    }
    let (status, residual) = status_of(&r);
    let (swapped_status, swapped_residual) = status_of(&rs);
    Ok(IdentityReport {
        relation: name.to_string(),
        expression: source.to_string(),
        status,
        residual,
        swapped_status,
        swapped_residual,
        c_degree: c_deg,
        canonical_lift_route: canonical,
        mutation_detected: !mutated.is_zero(),
        numeric_fallback: fallback,
    })
}

/// Verify a catalog relation by name.
pub fn verify_identity(relation_id: &str) -> Result<IdentityReport> {
    let rel = relation_catalog()
        .into_iter()
        .find(|r| r.name == relation_id)
        .ok_or_else(|| Error::Invalid(format!("unknown relation {relation_id}")))?;
    verify_expr(&rel.name, &rel.source, &rel.expr)
}

/// Verify every catalog relation, in parallel; the output keeps catalog order.
pub fn verify_catalog() -> Result<Vec<IdentityReport>> {
    relation_catalog().par_iter().map(|r| verify_expr(&r.name, &r.source, &r.expr)).collect()
}

/// Series in `T` and `delta_mu T` over `Q`, truncated at a total degree.
pub type StSeries = MPoly<BigRational>;

/// The Serre-Tate ring `Q[[T]][delta_mu T]` over `Q_p` with `pi = p`, in `n`
/// directions up to order `r`. All Frobenius lifts fix the rational
/// coefficients and send `delta_mu T` to `(delta_mu T)^p + p delta_{i mu} T`.
#[derive(Clone, Debug)]
pub struct StRing {
    pub p: u64,
    pub n: usize,
    pub r: usize,
    pub d: u32,
    vars: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl StRing {
    pub fn new(p: u64, n: usize, r: usize, d: u32) -> Result<StRing> {
        if !crate::util::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if d == 0 || n == 0 {
            return Err(Error::Invalid("degree and direction count must be positive".into()));
        }
        let vars = words_up_to(n, r);
        let index = vars.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(StRing { p, n, r, d, vars, index })
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[Word] {
        &self.vars
    }

    pub fn var_index(&self, w: &Word) -> Result<usize> {
        self.index.get(w).copied().ok_or(Error::OrderOverflow { len: w.len(), max: self.r })
    }

    pub fn zero(&self) -> StSeries {
        MPoly::zero(self.nvars(), self.d)
    }

    pub fn constant(&self, c: BigRational) -> StSeries {
        MPoly::constant(self.nvars(), self.d, c, &())
    }

    /// `delta_mu T`, or `T` for the empty word.
    pub fn delta_var(&self, mu: &Word) -> Result<StSeries> {
        Ok(MPoly::var(self.nvars(), self.d, self.var_index(mu)?, &()))
    }

    pub fn t(&self) -> StSeries {
        MPoly::var(self.nvars(), self.d, 0, &())
    }

    /// `phi_i(F)`.
    pub fn phi(&self, i: u8, f: &StSeries) -> Result<StSeries> {
        if i == 0 || i as usize > self.n {
            return Err(Error::BadLetter { letter: i, n: self.n });
        }
        let pq = q(self.p as i64);
        let mut images = Vec::with_capacity(self.nvars());
        for (k, w) in self.vars.iter().enumerate() {
            let xp = MPoly::var(self.nvars(), self.d, k, &()).pow(self.p as u32, &());
            if w.len() >= self.r {
                if f.involves(k) {
                    return Err(Error::OrderOverflow { len: w.len() + 1, max: self.r });
                }
                images.push(xp);
                continue;
            }
            let next = self.index[&w.prepend(i)];
            let lin = MPoly::monomial(self.nvars(), self.d, &[(next, 1)], pq.clone(), &());
            images.push(xp.add(&lin, &()));
        }
        Ok(f.substitute(&images, |c| c.clone(), &()))
    }

    /// `phi_mu(F) = phi_{i1}(... phi_{is}(F))`.
    pub fn phi_word(&self, mu: &Word, f: &StSeries) -> Result<StSeries> {
        let mut x = f.clone();
        for &l in mu.letters().iter().rev() {
            x = self.phi(l, &x)?;
        }
        Ok(x)
    }

    /// `log(1 + X)` for `X` without constant term.
    pub fn log1p(&self, x: &StSeries) -> Result<StSeries> {
        if x.coeff(&vec![0u16; self.nvars()]).is_some_and(|c| !c.is_zero()) {
            return Err(Error::LogDivergence);
        }
        let mut acc = self.zero();
        let mut pw = x.clone();
        for n in 1..=self.d as i64 {
            if pw.is_zero(&()) {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&pw.scale(&BigRational::new(BigInt::from(sign), BigInt::from(n)), &()), &());
            pw = pw.mul(x, &());
        }
        Ok(acc)
    }

    /// `log(1+T)`.
    pub fn log_1_plus_t(&self) -> StSeries {
        self.log1p(&self.t()).expect("T has no constant term")
    }

    /// `Psi_i = (1/p)(phi_i - p) log(1+T)`.
    pub fn psi(&self, i: u8) -> Result<StSeries> {
        let l = self.log_1_plus_t();
        let pl = self.phi(i, &l)?;
        let pq = q(self.p as i64);
        let diff = pl.sub(&l.scale(&pq, &()), &());
        Ok(diff.scale(&(BigRational::one() / pq), &()))
    }

    /// The series form `(1/p) sum_n s(n) (p^n / n) u^n` with
    /// `u = delta_i(1+T) / (1+T)^p`, where `s(n) = (-1)^(n+1)` when
    /// `alternating_from_plus` and `(-1)^n` otherwise.
    pub fn psi_series_form(&self, i: u8, alternating_from_plus: bool) -> Result<StSeries> {
        let p = self.p as i64;
        let one = self.constant(BigRational::one());
        let t = self.t();
        let phi_t = self.phi(i, &t)?;
        let onept_p = one.add(&t, &()).pow(self.p as u32, &());
        // delta_i(1+T) = (1 + phi_i(T) - (1+T)^p) / p.
        let num = one.add(&phi_t, &()).sub(&onept_p, &()).scale(&BigRational::new(BigInt::one(), BigInt::from(p)), &());
        // (1+T)^(-p) = sum_k binom(-p, k) T^k.
        let mut inv = self.zero();
        let mut b = BigRational::one();
        let mut tk = one.clone();
        for k in 0..=self.d as i64 {
            inv = inv.add(&tk.scale(&b, &()), &());
            b *= BigRational::new(BigInt::from(-p - k), BigInt::from(k + 1));
            tk = tk.mul(&t, &());
        }
        let u = num.mul(&inv, &());
        let mut acc = self.zero();
        let mut pw = u.clone();
        let mut pn = BigInt::one();
        for n in 1..=self.d as i64 {
            if pw.is_zero(&()) {
                break;
            }
            let plus = n % 2 == 1;
            let sign = if plus == alternating_from_plus { 1 } else { -1 };
            // (1/p) p^n / n = p^(n-1) / n.
            acc = acc.add(&pw.scale(&BigRational::new(BigInt::from(sign) * &pn, BigInt::from(n)), &()), &());
            pn *= p;
            pw = pw.mul(&u, &());
        }
        Ok(acc)
    }

    /// The canonical derivation `(1+T) d/dT` on `Q[[T]]`.
    pub fn canonical_derivation(&self, f: &StSeries) -> StSeries {
        let d = f.derivative(0, &());
        self.constant(BigRational::one()).add(&self.t(), &()).mul(&d, &())
    }

    /// `d^can_mu F = (1 + phi_mu(T)) dF / d(delta_mu T)`.
    pub fn serre_operator(&self, mu: &Word, f: &StSeries) -> Result<StSeries> {
        if mu.is_empty() {
            return Err(Error::EmptyWord);
        }
        let k = self.var_index(mu)?;
        let phi_t = self.phi_word(mu, &self.t())?;
        let factor = self.constant(BigRational::one()).add(&phi_t, &());
        Ok(factor.mul(&f.derivative(k, &()), &()))
    }

    /// Map into a tower jet ring with the same variables, reducing the
    /// rational coefficients.
    pub fn to_jet(&self, jr: &JetRing, f: &StSeries) -> Result<JetElement> {
        if jr.vars() != self.vars() {
            return Err(Error::Dimension("jet ring variables differ".into()));
        }
        let t = &jr.fam.tower;
        let mut out = jr.zero();
        for (m, c) in &f.terms {
            let k = t.k_from_bigrational(c)?;
            out.terms.insert(m.clone(), k);
        }
        Ok(out.truncate(jr.d))
    }
}

/// `psi_st_series(i, D, K)`: `Psi_i` in one order-one ring over `Z_p` with
/// precision `p^K`.
pub fn psi_st_series(p: u64, i: u8, d: u32, k: u32) -> Result<(JetRing, JetElement)> {
    let st = StRing::new(p, 2, 1, d)?;
    let t = Tower::new(p, 2, 0, 1, k)?;
    let fam = FrobeniusFamily::new(t, vec![0, 0])?;
    let jr = JetRing::new(fam, 1, d)?;
    let psi = st.psi(i)?;
    let j = st.to_jet(&jr, &psi)?;
    if j.terms.values().any(|c| c.den > 0 && c.abs_precision() < 1) {
        return Err(Error::PrecisionExhausted("Psi coefficients".into()));
    }
    Ok((jr, j))
}

/// Reject `beta` unless `v_p(beta) > 1/(p-1)`.
pub fn check_beta(t: &Tower, beta: &KElem) -> Result<()> {
    let bound = Ratio::new(1, t.p() as i64 - 1);
    match t.k_valuation(beta) {
        Valuation::Infinite => Ok(()),
        Valuation::Finite(v) if v > bound => Ok(()),
        _ => Err(Error::BetaTooLarge),
    }
}

/// `f_mu(beta) = beta^{phi_mu} - p^r beta`, and with `nu` given
/// `f_{mu,nu}(beta) = p^{N+1}(p^s beta^{phi_mu} - p^r beta^{phi_nu})`, with `c = 1`.
pub fn st_f_values(fam: &FrobeniusFamily, beta: &KElem, mu: &Word, nu: Option<&Word>) -> Result<KElem> {
    let t = &fam.tower;
    check_beta(t, beta)?;
    if mu.is_empty() {
        return Err(Error::EmptyWord);
    }
    let r = mu.len() as i64;
    let bmu = fam.phi_word_k(mu, beta)?;
    match nu {
        None => Ok(t.k_sub(&bmu, &t.k_mul_p_pow(beta, r))),
        Some(nu) => {
            if nu.is_empty() {
                return Err(Error::EmptyWord);
            }
            if mu == nu {
                return Err(Error::DistinctWordsRequired);
            }
            let s = nu.len() as i64;
            let bnu = fam.phi_word_k(nu, beta)?;
            let v = t.k_sub(&t.k_mul_p_pow(&bmu, s), &t.k_mul_p_pow(&bnu, r));
            Ok(t.k_mul_p_pow(&v, t.n_of_pi() + 1))
        }
    }
}

/// `f~_mu = p^{N+1} f_mu` at `beta`.
pub fn st_f_tilde(fam: &FrobeniusFamily, beta: &KElem, mu: &Word) -> Result<KElem> {
    let t = &fam.tower;
    let f = st_f_values(fam, beta, mu, None)?;
    Ok(t.k_mul_p_pow(&f, t.n_of_pi() + 1))
}

/// All values up to order `r`, in the layout used by the Gamma matrix.
pub fn st_ftable(fam: &FrobeniusFamily, beta: &KElem, r: usize) -> Result<FTable> {
    let mut tab = FTable::default();
    let words = nonempty_words_up_to(fam.n(), r);
    for mu in &words {
        tab.tilde.insert(mu.clone(), st_f_tilde(fam, beta, mu)?);
        for nu in &words {
            if mu != nu {
                tab.pair.insert((mu.clone(), nu.clone()), st_f_values(fam, beta, mu, Some(nu))?);
            }
        }
    }
    Ok(tab)
}

/// Coefficients supporting exact division, for the period invariants.
pub trait FieldCoeff: crate::mpoly::Coeff {
    fn div(&self, o: &Self, ctx: &Self::Ctx) -> Result<Self>;
}

impl FieldCoeff for BigRational {
    fn div(&self, o: &Self, _: &()) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self / o)
    }
}

impl FieldCoeff for KElem {
    fn div(&self, o: &Self, t: &Tower) -> Result<Self> {
        t.k_div(self, o)
    }
}

/// Values of the slots `Psi_i` and `Psi_i^{phi_j}`.
#[derive(Clone, Debug)]
pub struct PsiSlots<C> {
    pub psi: [C; 2],
    /// `phi[i][j] = Psi_{i+1}^{phi_{j+1}}`.
    pub phi: [[C; 2]; 2],
}

/// `t_0 = Psi2/Psi1`, `t_ij = Psi_i^{phi_j}/Psi1` and the four invariants
/// `tau, tau', tau'', tau'''`.
#[derive(Clone, Debug)]
pub struct PeriodInvariants<C> {
    pub t0: C,
    /// `t[i][j] = t_{(i+1)(j+1)}`.
    pub t: [[C; 2]; 2],
    pub tau: [C; 4],
}

pub fn period_invariants<C: FieldCoeff>(s: &PsiSlots<C>, p: u64, ctx: &C::Ctx) -> Result<PeriodInvariants<C>> {
    let d = &s.psi[0];
    let t0 = s.psi[1].div(d, ctx)?;
    let mut t: [[C; 2]; 2] = [[C::zero(ctx), C::zero(ctx)], [C::zero(ctx), C::zero(ctx)]];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = s.phi[i][j].div(d, ctx)?;
        }
    }
    let tau = taus_from_t(&t0, &t, p, ctx)?;
    Ok(PeriodInvariants { t0, t, tau })
}

/// `tau = (t11 + p - p t0)/(t0 t11)`, `tau' = (t21 + p - p t0)/(t0 t21)`,
/// `tau'' = t0 (t22 + p t0 - p)/t22`, `tau''' = t0 (t12 + p t0 - p)/t12`.
pub fn taus_from_t<C: FieldCoeff>(t0: &C, t: &[[C; 2]; 2], p: u64, ctx: &C::Ctx) -> Result<[C; 4]> {
    let pc = C::one(ctx).scale_int(p as i64, ctx);
    let pt0 = pc.mul(t0, ctx);
    let first = |x: &C| -> Result<C> { x.add(&pc, ctx).sub(&pt0, ctx).div(&t0.mul(x, ctx), ctx) };
    let second = |x: &C| -> Result<C> { t0.mul(&x.add(&pt0, ctx).sub(&pc, ctx), ctx).div(x, ctx) };
    Ok([first(&t[0][0])?, first(&t[1][0])?, second(&t[1][1])?, second(&t[0][1])?])
}

/// Recover `t_ij` from `t0` and the four invariants.
pub fn invert_period_invariants<C: FieldCoeff>(t0: &C, tau: &[C; 4], p: u64, ctx: &C::Ctx) -> Result<[[C; 2]; 2]> {
    let one = C::one(ctx);
    let pc = one.scale_int(p as i64, ctx);
    let a = pc.mul(&one.sub(t0, ctx), ctx);
    // t = p(1 - t0)/(tau t0 - 1) for the first pair, p t0 (t0 - 1)/(tau - t0) for the second.
    let first = |x: &C| a.div(&x.mul(t0, ctx).sub(&one, ctx), ctx);
    let b = a.mul(t0, ctx).neg(ctx);
    let second = |x: &C| b.div(&x.sub(t0, ctx), ctx);
    let t11 = first(&tau[0])?;
    let t21 = first(&tau[1])?;
    let t22 = second(&tau[2])?;
    let t12 = second(&tau[3])?;
    Ok([[t11, t12], [t21, t22]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_fourteen_entries() {
        let c = relation_catalog();
        assert_eq!(c.len(), 14);
        assert!(c.iter().any(|r| r.name == "gogu4"));
    }
}
