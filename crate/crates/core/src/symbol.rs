//! The twisted symbol ring `K_{pi,Phi}`: sums `sum lambda_mu phi_mu` with
//! `phi_i lambda = phi_i(lambda) phi_i`, its action on `K_pi`, and the
//! coefficient matrix of the second order Picard-Fuchs symbols.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::PMatrix;
use crate::tower::{FrobeniusFamily, KElem};
use crate::words::Word;

/// A symbol `sum_mu lambda_mu phi_mu` with coefficients in `K_pi`.
#[derive(Clone, Debug, Default)]
pub struct Symbol {
    pub terms: BTreeMap<Word, KElem>,
}

impl Symbol {
    pub fn zero() -> Symbol {
        Symbol::default()
    }

    /// `lambda * phi_mu`.
    pub fn term(mu: Word, lambda: KElem) -> Symbol {
        let mut terms = BTreeMap::new();
        terms.insert(mu, lambda);
        Symbol { terms }
    }

    /// Largest word length with a nonzero coefficient.
    pub fn order(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    fn insert_add(&mut self, fam: &FrobeniusFamily, w: Word, c: KElem) {
        let t = &fam.tower;
        let v = match self.terms.remove(&w) {
            Some(old) => t.k_add(&old, &c),
            None => c,
        };
        if !t.k_is_zero(&v) {
            self.terms.insert(w, v);
        }
    }

    pub fn add(&self, fam: &FrobeniusFamily, other: &Symbol) -> Symbol {
        let mut r = self.clone();
        for (w, c) in &other.terms {
            r.insert_add(fam, w.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self, fam: &FrobeniusFamily) -> Symbol {
        let t = &fam.tower;
        Symbol { terms: self.terms.iter().map(|(w, c)| (w.clone(), t.k_neg(c))).collect() }
    }

    pub fn sub(&self, fam: &FrobeniusFamily, other: &Symbol) -> Symbol {
        self.add(fam, &other.neg(fam))
    }

    /// Left multiplication by a scalar.
    pub fn scale(&self, fam: &FrobeniusFamily, lambda: &KElem) -> Symbol {
        let t = &fam.tower;
        let mut r = Symbol::zero();
        for (w, c) in &self.terms {
            r.insert_add(fam, w.clone(), t.k_mul(lambda, c));
        }
        r
    }

    /// True when every coefficient vanishes at its precision.
    pub fn is_zero(&self, fam: &FrobeniusFamily) -> bool {
        self.terms.values().all(|c| fam.tower.k_is_zero(c))
    }

    /// JSON form: word -> (formatted coefficient, denominator exponent).
    pub fn to_json(&self) -> serde_json::Value {
        let m: BTreeMap<String, (Vec<u64>, u32)> =
            self.terms.iter().map(|(w, c)| (w.to_string(), (c.num.coeffs().to_vec(), c.den))).collect();
        serde_json::to_value(m).expect("serialisable")
    }
}

/// `(lambda phi_mu)(rho phi_nu) = lambda phi_mu(rho) phi_{mu nu}`, extended bilinearly.
pub fn sym_mul(fam: &FrobeniusFamily, a: &Symbol, b: &Symbol) -> Result<Symbol> {
    let t = &fam.tower;
    let mut r = Symbol::zero();
    for (mu, lam) in &a.terms {
        mu.validate(fam.n())?;
        for (nu, rho) in &b.terms {
            nu.validate(fam.n())?;
            let c = t.k_mul(lam, &fam.phi_word_k(mu, rho)?);
            r.insert_add(fam, mu.concat(nu), c);
        }
    }
    Ok(r)
}

/// `theta^alg(alpha) = sum lambda_mu phi_mu(alpha)`.
pub fn sym_eval(fam: &FrobeniusFamily, s: &Symbol, alpha: &KElem) -> Result<KElem> {
    let t = &fam.tower;
    let mut acc = t.k_zero();
    for (mu, lam) in &s.terms {
        let v = t.k_mul(lam, &fam.phi_word_k(mu, alpha)?);
        acc = t.k_add(&acc, &v);
    }
    if acc.abs_precision() < 1 && !s.terms.is_empty() {
        return Err(Error::PrecisionExhausted("denominators exceed the working precision".into()));
    }
    Ok(acc)
}

/// Values `f~_mu` and `f_{mu,nu}` attached to the characters `psi_mu`, `psi_{mu,nu}`.
#[derive(Clone, Debug, Default)]
pub struct FTable {
    pub tilde: BTreeMap<Word, KElem>,
    pub pair: BTreeMap<(Word, Word), KElem>,
}

impl FTable {
    pub fn tilde(&self, w: &str) -> Result<&KElem> {
        let k = Word::parse(w)?;
        self.tilde.get(&k).ok_or_else(|| Error::MissingClass(format!("f~_{w}")))
    }

    pub fn pair(&self, a: &str, b: &str) -> Result<&KElem> {
        let k = (Word::parse(a)?, Word::parse(b)?);
        self.pair.get(&k).ok_or_else(|| Error::MissingClass(format!("f_{{{a},{b}}}")))
    }
}

/// The basis `phi_1^2, phi_2^2, phi_1 phi_2, phi_2 phi_1, phi_1, phi_2, 1` of
/// second order symbols in two directions.
pub fn gamma_basis() -> Vec<Word> {
    ["11", "22", "12", "21", "1", "2", "e"].iter().map(|w| Word::parse(w).expect("static")).collect()
}

/// Symbol `f~_nu phi_mu - f~_mu phi_nu + f_{mu,nu}` of `psi_{mu,nu}`.
pub fn psi_pair_symbol(fam: &FrobeniusFamily, f: &FTable, mu: &str, nu: &str) -> Result<Symbol> {
    let t = &fam.tower;
    let mut s = Symbol::term(Word::parse(mu)?, f.tilde(nu)?.clone());
    s = s.add(fam, &Symbol::term(Word::parse(nu)?, t.k_neg(f.tilde(mu)?)));
    s = s.add(fam, &Symbol::term(Word::empty(), f.pair(mu, nu)?.clone()));
    Ok(s)
}

/// The six symbols `psi_{1,2}, phi_1 psi_{1,2}, phi_2 psi_{1,2}, psi_{11,1}, psi_{22,2}, psi_{11,22}`.
pub fn gamma_symbols(fam: &FrobeniusFamily, f: &FTable) -> Result<Vec<Symbol>> {
    if fam.n() < 2 {
        return Err(Error::Invalid("the Gamma matrix needs two Frobenius lifts".into()));
    }
    let t = &fam.tower;
    let s12 = psi_pair_symbol(fam, f, "1", "2")?;
    let one = t.k_int(1);
    let phi1 = Symbol::term(Word::letter(1), one.clone());
    let phi2 = Symbol::term(Word::letter(2), one);
    Ok(vec![
        s12.clone(),
        sym_mul(fam, &phi1, &s12)?,
        sym_mul(fam, &phi2, &s12)?,
        psi_pair_symbol(fam, f, "11", "1")?,
        psi_pair_symbol(fam, f, "22", "2")?,
        psi_pair_symbol(fam, f, "11", "22")?,
    ])
}

/// The 6x7 matrix of coefficients of [`gamma_symbols`] in [`gamma_basis`].
pub fn gamma_matrix(fam: &FrobeniusFamily, f: &FTable, precision: u32) -> Result<PMatrix> {
    let t = &fam.tower;
    let basis = gamma_basis();
    let mut entries = Vec::with_capacity(42);
    for s in gamma_symbols(fam, f)? {
        if s.terms.keys().any(|w| !basis.contains(w)) {
            return Err(Error::Invalid("symbol outside the second order basis".into()));
        }
        for b in &basis {
            entries.push(s.terms.get(b).cloned().unwrap_or_else(|| t.k_zero()));
        }
    }
    PMatrix::new(6, 7, entries, precision)
}

/// The same matrix assembled entry by entry from the displayed formula, used
/// as an independent cross-check of [`gamma_matrix`].
pub fn gamma_matrix_explicit(fam: &FrobeniusFamily, f: &FTable, precision: u32) -> Result<PMatrix> {
    let t = &fam.tower;
    let z = t.k_zero();
    let (f1, f2) = (f.tilde("1")?.clone(), f.tilde("2")?.clone());
    let (f11, f22) = (f.tilde("11")?.clone(), f.tilde("22")?.clone());
    let f12 = f.pair("1", "2")?.clone();
    let f111 = f.pair("11", "1")?.clone();
    let f222 = f.pair("22", "2")?.clone();
    let f1122 = f.pair("11", "22")?.clone();
    let p1 = |x: &KElem| fam.phi_k(1, x);
    let p2 = |x: &KElem| fam.phi_k(2, x);
    let n = |x: &KElem| t.k_neg(x);
    let rows: Vec<Vec<KElem>> = vec![
        vec![z.clone(), z.clone(), z.clone(), z.clone(), f2.clone(), n(&f1), f12.clone()],
        vec![p1(&f2)?, z.clone(), n(&p1(&f1)?), z.clone(), p1(&f12)?, z.clone(), z.clone()],
        vec![z.clone(), n(&p2(&f1)?), z.clone(), p2(&f2)?, z.clone(), p2(&f12)?, z.clone()],
        vec![f1.clone(), z.clone(), z.clone(), z.clone(), n(&f11), z.clone(), f111],
        vec![z.clone(), f2.clone(), z.clone(), z.clone(), z.clone(), n(&f22), f222],
        vec![f22, n(&f11), z.clone(), z.clone(), z.clone(), z.clone(), f1122],
    ];
    PMatrix::new(6, 7, rows.into_iter().flatten().collect(), precision)
}

/// Summary of the Gamma checks: all 6x6 minors and the upper left 5x5 minor.
#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub precision: u32,
    pub six_minor_valuations: Vec<crate::tower::Valuation>,
    pub all_six_minors_vanish: bool,
    pub upper_left_five_minor_valuation: crate::tower::Valuation,
    pub upper_left_five_minor_nonzero: bool,
    pub matches_explicit_formula: bool,
}

pub fn gamma_report(fam: &FrobeniusFamily, f: &FTable, precision: u32) -> Result<GammaReport> {
    let t = &fam.tower;
    let g = gamma_matrix(fam, f, precision)?;
    let ge = gamma_matrix_explicit(fam, f, precision)?;
    let same = g.entries.iter().zip(ge.entries.iter()).all(|(a, b)| t.k_is_zero(&t.k_sub(a, b)));
    let six = g.rank_minors(t, 6)?;
    let r5: Vec<usize> = (0..5).collect();
    let m5 = g.minor(t, &r5, &r5)?;
    let v5 = t.k_valuation(&m5);
    Ok(GammaReport {
        precision,
        six_minor_valuations: six.minors.iter().map(|m| m.valuation).collect(),
        all_six_minors_vanish: six.minors.iter().all(|m| m.vanishing),
        upper_left_five_minor_valuation: v5,
        upper_left_five_minor_nonzero: !v5.at_least(num_rational::Ratio::from_integer(precision as i64)),
        matches_explicit_formula: same,
    })
}
