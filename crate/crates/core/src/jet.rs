//! Truncated partial pi-jet algebras.
//!
//! The variables are `T = delta_() T` and `delta_mu T` for every nonempty word
//! `mu` of length at most `r`. The lift `phi_i` acts on coefficients by
//! `phi^(gamma_i)` and on variables by
//! `delta_mu T -> (delta_mu T)^p + pi delta_{i mu} T`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mpoly::MPoly;
use crate::tower::{FrobeniusFamily, KElem, TowerElement, Valuation};
use crate::words::{words_up_to, Word};

/// An element of the truncated jet algebra.
pub type JetElement = MPoly<KElem>;

/// Jet algebra `R_pi[[T]][delta_mu T]` in `n` directions up to order `r`,
/// truncated at total degree `d`.
#[derive(Clone, Debug)]
pub struct JetRing {
    pub fam: FrobeniusFamily,
    pub r: usize,
    pub d: u32,
    vars: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl JetRing {
    pub fn new(fam: FrobeniusFamily, r: usize, d: u32) -> Result<JetRing> {
        if d == 0 {
            return Err(Error::Invalid("truncation degree must be positive".into()));
        }
        let vars = words_up_to(fam.n(), r);
        let index = vars.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(JetRing { fam, r, d, vars, index })
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Variable words; index 0 is the empty word, standing for `T`.
    pub fn vars(&self) -> &[Word] {
        &self.vars
    }

    pub fn var_index(&self, w: &Word) -> Result<usize> {
        self.index.get(w).copied().ok_or(Error::OrderOverflow { len: w.len(), max: self.r })
    }

    pub fn zero(&self) -> JetElement {
        MPoly::zero(self.nvars(), self.d)
    }

    pub fn constant(&self, c: KElem) -> JetElement {
        MPoly::constant(self.nvars(), self.d, c, self.fam.tower.as_ref())
    }

    pub fn t(&self) -> JetElement {
        MPoly::var(self.nvars(), self.d, 0, self.fam.tower.as_ref())
    }

    /// The variable `delta_mu T` (`T` itself for the empty word).
    pub fn delta_var(&self, mu: &Word) -> Result<JetElement> {
        Ok(MPoly::var(self.nvars(), self.d, self.var_index(mu)?, self.fam.tower.as_ref()))
    }

    /// `c * T^k`.
    pub fn t_pow(&self, k: u16, c: KElem) -> JetElement {
        MPoly::monomial(self.nvars(), self.d, &[(0, k)], c, self.fam.tower.as_ref())
    }

    fn checked_letter(&self, i: u8) -> Result<u64> {
        if i == 0 || i as usize > self.fam.n() {
            return Err(Error::BadLetter { letter: i, n: self.fam.n() });
        }
        Ok(self.fam.gammas[i as usize - 1])
    }

    /// `phi_i(F)`. Errors when `F` involves a variable of top order `r`.
    pub fn phi_endomorphism(&self, i: u8, f: &JetElement) -> Result<JetElement> {
        let gamma = self.checked_letter(i)?;
        let t = &self.fam.tower;
        let pi = t.k_from(&t.pi());
        let mut images = Vec::with_capacity(self.nvars());
        for (k, w) in self.vars.iter().enumerate() {
            let img_var = MPoly::var(self.nvars(), self.d, k, t.as_ref()).pow(t.p() as u32, t.as_ref());
            if w.len() >= self.r {
                if f.involves(k) {
                    return Err(Error::OrderOverflow { len: w.len() + 1, max: self.r });
                }
                images.push(img_var);
                continue;
            }
            let next = self.index[&w.prepend(i)];
            let lin = MPoly::monomial(self.nvars(), self.d, &[(next, 1)], pi.clone(), t.as_ref());
            images.push(img_var.add(&lin, t.as_ref()));
        }
        Ok(f.substitute(&images, |c| t.k_phi(gamma, c), t.as_ref()))
    }

    /// `phi_mu(F) = phi_{i1}(... phi_{is}(F))`.
    pub fn phi_word(&self, mu: &Word, f: &JetElement) -> Result<JetElement> {
        let mut x = f.clone();
        for &l in mu.letters().iter().rev() {
            x = self.phi_endomorphism(l, &x)?;
        }
        Ok(x)
    }

    /// `delta_i(F) = (phi_i(F) - F^p) / pi`.
    pub fn delta_operator(&self, i: u8, f: &JetElement) -> Result<JetElement> {
        let t = &self.fam.tower;
        let phi = self.phi_endomorphism(i, f)?;
        let fp = f.pow(t.p() as u32, t.as_ref());
        let diff = phi.sub(&fp, t.as_ref());
        let out = diff.map_coeffs(|c| div_pi_k(t, c), t.as_ref());
        if out.terms.values().any(|c| c.abs_precision() < 1) {
            return Err(Error::PrecisionExhausted("delta operator".into()));
        }
        Ok(out)
    }

    /// The values `delta_mu(a)` for all variables, `a` itself first.
    pub fn jet_of_point(&self, a: &TowerElement) -> Result<Vec<TowerElement>> {
        let mut vals = Vec::with_capacity(self.nvars());
        for w in &self.vars {
            vals.push(self.fam.delta_word(w, a)?);
        }
        Ok(vals)
    }

    /// Evaluate `F` at the jet of `a`; needs `v(a) > 0`.
    ///
    /// The result is exact for the stored (truncated) polynomial. For a
    /// series truncated at degree `d`, the omitted tail is a sum of monomials
    /// of degree `> d`; the caller bounds it from the coefficient decay.
    pub fn eval_jet(&self, f: &JetElement, a: &TowerElement) -> Result<KElem> {
        let t = &self.fam.tower;
        match t.valuation(a) {
            Valuation::Finite(v) if v > num_rational::Ratio::from_integer(0) => {}
            Valuation::Infinite => {}
            _ => return Err(Error::NotTopologicallyNilpotent),
        }
        let vals = self.jet_of_point(a)?;
        let point: Vec<KElem> = vals.iter().map(|x| t.k_from(x)).collect();
        Ok(f.eval(&point, t.as_ref()))
    }

    /// Sparse JSON form: one entry per monomial, with exponents keyed by the
    /// variable word (`"T"` for `T`) and the coefficient as `num / p^den`.
    pub fn to_json(&self, f: &JetElement) -> serde_json::Value {
        let t = &self.fam.tower;
        let terms: Vec<serde_json::Value> = f
            .terms
            .iter()
            .map(|(m, c)| {
                let mono: serde_json::Map<String, serde_json::Value> = m
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(k, &e)| {
                        let name = if k == 0 { "T".to_string() } else { self.vars[k].to_string() };
                        (name, serde_json::Value::from(e))
                    })
                    .collect();
                serde_json::json!({ "monomial": mono, "num": t.to_json(&c.num), "den": c.den })
            })
            .collect();
        serde_json::json!({ "degree": f.max_deg, "terms": terms })
    }

    /// Evaluate at an arbitrary point of the jet space (values for every variable).
    pub fn eval_at(&self, f: &JetElement, point: &[TowerElement]) -> KElem {
        let t = &self.fam.tower;
        let pt: Vec<KElem> = point.iter().map(|x| t.k_from(x)).collect();
        f.eval(&pt, t.as_ref())
    }
}

/// Divide a `K_pi` element by `pi`: `x / pi = x pi^(e-1) / p`.
pub fn div_pi_k(t: &crate::tower::Tower, c: &KElem) -> KElem {
    let num = t.mul_pi_pow(&c.num, t.e() - 1);
    t.k_normalize(KElem { num, den: c.den + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::Tower;

    #[test]
    fn phi_of_t() {
        let t = Tower::new(5, 2, 1, 1, 8).unwrap();
        let fam = FrobeniusFamily::new(t.clone(), vec![0, 1]).unwrap();
        let j = JetRing::new(fam, 2, 12).unwrap();
        let pt = j.phi_endomorphism(1, &j.t()).unwrap();
        assert_eq!(pt.len(), 2);
        assert!(j.phi_endomorphism(1, &j.delta_var(&Word::parse("12").unwrap()).unwrap()).is_err());
        let d = j.delta_operator(2, &j.t()).unwrap();
        let expect = j.delta_var(&Word::letter(2)).unwrap();
        assert!(d.sub(&expect, t.as_ref()).is_zero(t.as_ref()));
    }
}
