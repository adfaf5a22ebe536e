//! Sparse multivariate polynomials truncated at a total degree.
//!
//! Coefficients implement [`Coeff`], which takes an explicit context so that
//! tower elements (whose arithmetic needs the tower tables) and rationals can
//! share the same code.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::tower::{KElem, Tower};

/// Exponent vector.
pub type Mono = SmallVec<[u16; 8]>;

pub trait Coeff: Clone + Debug {
    type Ctx: ?Sized;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
    fn is_zero(&self, ctx: &Self::Ctx) -> bool;
    fn add(&self, o: &Self, ctx: &Self::Ctx) -> Self;
    fn sub(&self, o: &Self, ctx: &Self::Ctx) -> Self;
    fn mul(&self, o: &Self, ctx: &Self::Ctx) -> Self;
    fn neg(&self, ctx: &Self::Ctx) -> Self;
    fn scale_int(&self, n: i64, ctx: &Self::Ctx) -> Self;
}

impl Coeff for KElem {
    type Ctx = Tower;
    fn zero(t: &Tower) -> Self {
        t.k_zero()
    }
    fn one(t: &Tower) -> Self {
        t.k_int(1)
    }
    fn is_zero(&self, t: &Tower) -> bool {
        t.k_is_zero(self)
    }
    fn add(&self, o: &Self, t: &Tower) -> Self {
        t.k_add(self, o)
    }
    fn sub(&self, o: &Self, t: &Tower) -> Self {
        t.k_sub(self, o)
    }
    fn mul(&self, o: &Self, t: &Tower) -> Self {
        t.k_mul(self, o)
    }
    fn neg(&self, t: &Tower) -> Self {
        t.k_neg(self)
    }
    fn scale_int(&self, n: i64, t: &Tower) -> Self {
        t.k_scale_int(self, n)
    }
}

impl Coeff for BigRational {
    type Ctx = ();
    fn zero(_: &()) -> Self {
        <BigRational as Zero>::zero()
    }
    fn one(_: &()) -> Self {
        <BigRational as One>::one()
    }
    fn is_zero(&self, _: &()) -> bool {
        <BigRational as Zero>::is_zero(self)
    }
    fn add(&self, o: &Self, _: &()) -> Self {
        self + o
    }
    fn sub(&self, o: &Self, _: &()) -> Self {
        self - o
    }
    fn mul(&self, o: &Self, _: &()) -> Self {
        self * o
    }
    fn neg(&self, _: &()) -> Self {
        -self
    }
    fn scale_int(&self, n: i64, _: &()) -> Self {
        self * BigRational::from_integer(BigInt::from(n))
    }
}

pub fn mono_degree(m: &Mono) -> u32 {
    m.iter().map(|&e| e as u32).sum()
}

/// A polynomial in `nvars` variables, keeping only monomials of total degree `<= max_deg`.
#[derive(Clone, Debug)]
pub struct MPoly<C> {
    pub nvars: usize,
    pub max_deg: u32,
    pub terms: BTreeMap<Mono, C>,
}

impl<C: Coeff> MPoly<C> {
    pub fn zero(nvars: usize, max_deg: u32) -> Self {
        MPoly { nvars, max_deg, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, max_deg: u32, c: C, ctx: &C::Ctx) -> Self {
        let mut p = Self::zero(nvars, max_deg);
        if !c.is_zero(ctx) {
            p.terms.insert(SmallVec::from_elem(0, nvars), c);
        }
        p
    }

    pub fn var(nvars: usize, max_deg: u32, i: usize, ctx: &C::Ctx) -> Self {
        Self::monomial(nvars, max_deg, &[(i, 1)], C::one(ctx), ctx)
    }

    /// `c * prod x_i^e_i` from a sparse list of `(variable, exponent)`.
    pub fn monomial(nvars: usize, max_deg: u32, exps: &[(usize, u16)], c: C, ctx: &C::Ctx) -> Self {
        let mut m: Mono = SmallVec::from_elem(0, nvars);
        for &(i, e) in exps {
            m[i] += e;
        }
        let mut p = Self::zero(nvars, max_deg);
        if mono_degree(&m) <= max_deg && !c.is_zero(ctx) {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self, ctx: &C::Ctx) -> bool {
        self.terms.values().all(|c| c.is_zero(ctx))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree present.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(mono_degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, m: &[u16]) -> Option<&C> {
        let k: Mono = m.iter().copied().collect();
        self.terms.get(&k)
    }

    fn add_into(terms: &mut BTreeMap<Mono, C>, m: Mono, c: C, ctx: &C::Ctx) {
        match terms.get_mut(&m) {
            Some(old) => {
                let v = old.add(&c, ctx);
                if v.is_zero(ctx) {
                    terms.remove(&m);
                } else {
                    *old = v;
                }
            }
            None => {
                if !c.is_zero(ctx) {
                    terms.insert(m, c);
                }
            }
        }
    }

    pub fn add(&self, o: &Self, ctx: &C::Ctx) -> Self {
        let mut r = self.clone();
        r.max_deg = self.max_deg.min(o.max_deg);
        for (m, c) in &o.terms {
            Self::add_into(&mut r.terms, m.clone(), c.clone(), ctx);
        }
        r.retruncate();
        r
    }

    pub fn neg(&self, ctx: &C::Ctx) -> Self {
        MPoly {
            nvars: self.nvars,
            max_deg: self.max_deg,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg(ctx))).collect(),
        }
    }

    pub fn sub(&self, o: &Self, ctx: &C::Ctx) -> Self {
        self.add(&o.neg(ctx), ctx)
    }

    pub fn scale(&self, c: &C, ctx: &C::Ctx) -> Self {
        let mut r = Self::zero(self.nvars, self.max_deg);
        for (m, x) in &self.terms {
            Self::add_into(&mut r.terms, m.clone(), c.mul(x, ctx), ctx);
        }
        r
    }

    pub fn map_coeffs<F: Fn(&C) -> C>(&self, f: F, ctx: &C::Ctx) -> Self {
        let mut r = Self::zero(self.nvars, self.max_deg);
        for (m, x) in &self.terms {
            Self::add_into(&mut r.terms, m.clone(), f(x), ctx);
        }
        r
    }

    fn retruncate(&mut self) {
        let d = self.max_deg;
        self.terms.retain(|m, _| mono_degree(m) <= d);
    }

    /// Restrict to total degree `<= d`.
    pub fn truncate(&self, d: u32) -> Self {
        let mut r = self.clone();
        r.max_deg = d.min(self.max_deg);
        r.retruncate();
        r
    }

    pub fn mul(&self, o: &Self, ctx: &C::Ctx) -> Self {
        let d = self.max_deg.min(o.max_deg);
        let mut out: BTreeMap<Mono, C> = BTreeMap::new();
        let a: Vec<(&Mono, u32, &C)> = self.terms.iter().map(|(m, c)| (m, mono_degree(m), c)).collect();
        let b: Vec<(&Mono, u32, &C)> = o.terms.iter().map(|(m, c)| (m, mono_degree(m), c)).collect();
        for &(ma, da, ca) in &a {
            for &(mb, db, cb) in &b {
                if da + db > d {
                    continue;
                }
                let m: Mono = ma.iter().zip(mb.iter()).map(|(x, y)| x + y).collect();
                Self::add_into(&mut out, m, ca.mul(cb, ctx), ctx);
            }
        }
        MPoly { nvars: self.nvars, max_deg: d, terms: out }
    }

    pub fn pow(&self, n: u32, ctx: &C::Ctx) -> Self {
        let mut r = Self::constant(self.nvars, self.max_deg, C::one(ctx), ctx);
        for _ in 0..n {
            r = r.mul(self, ctx);
        }
        r
    }

    /// Partial derivative in variable `i`. The result is exact through degree `max_deg - 1`.
    pub fn derivative(&self, i: usize, ctx: &C::Ctx) -> Self {
        let mut r = Self::zero(self.nvars, self.max_deg.saturating_sub(1));
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2[i] -= 1;
            Self::add_into(&mut r.terms, m2, c.scale_int(m[i] as i64, ctx), ctx);
        }
        r
    }

    /// Substitute `x_k -> images[k]` and apply `coeff_map` to coefficients.
    ///
    /// Every image must have zero constant term so that truncation commutes
    /// with substitution.
    pub fn substitute<F: Fn(&C) -> C>(&self, images: &[Self], coeff_map: F, ctx: &C::Ctx) -> Self {
        let d = self.max_deg;
        let mut maxe = vec![0u16; self.nvars];
        for m in self.terms.keys() {
            for (k, &e) in m.iter().enumerate() {
                maxe[k] = maxe[k].max(e);
            }
        }
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(self.nvars);
        for k in 0..self.nvars {
            let mut v = vec![Self::constant(self.nvars, d, C::one(ctx), ctx)];
            for e in 1..=maxe[k] as usize {
                let next = v[e - 1].mul(&images[k], ctx);
                v.push(next);
            }
            powers.push(v);
        }
        let mut out = Self::zero(self.nvars, d);
        for (m, c) in &self.terms {
            let mut term = Self::constant(self.nvars, d, coeff_map(c), ctx);
            for (k, &e) in m.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&powers[k][e as usize], ctx);
                }
            }
            for (mm, cc) in term.terms {
                Self::add_into(&mut out.terms, mm, cc, ctx);
            }
        }
        out
    }

    /// Evaluate at a point, given as a value for every variable.
    pub fn eval(&self, point: &[C], ctx: &C::Ctx) -> C {
        let mut maxe = vec![0u16; self.nvars];
        for m in self.terms.keys() {
            for (k, &e) in m.iter().enumerate() {
                maxe[k] = maxe[k].max(e);
            }
        }
        let powers: Vec<Vec<C>> = (0..self.nvars)
            .map(|k| {
                let mut v = vec![C::one(ctx)];
                for e in 1..=maxe[k] as usize {
                    let next = v[e - 1].mul(&point[k], ctx);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = C::zero(ctx);
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (k, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&powers[k][e as usize], ctx);
                }
            }
            acc = acc.add(&t, ctx);
        }
        acc
    }

    /// Terms that involve variable `i`.
    pub fn involves(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m[i] > 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn truncated_product() {
        let x = MPoly::<BigRational>::var(2, 3, 0, &());
        let y = MPoly::<BigRational>::var(2, 3, 1, &());
        let s = x.add(&y, &());
        let c = s.pow(4, &());
        assert!(c.is_empty());
        let c = s.pow(3, &());
        assert_eq!(c.coeff(&[2, 1]), Some(&q(3)));
    }

    #[test]
    fn substitution_and_derivative() {
        let x = MPoly::<BigRational>::var(1, 6, 0, &());
        let f = x.pow(2, &()).add(&x, &());
        let g = f.substitute(&[x.pow(2, &())], |c| c.clone(), &());
        assert_eq!(g.coeff(&[4]), Some(&q(1)));
        assert_eq!(g.coeff(&[2]), Some(&q(1)));
        let d = f.derivative(0, &());
        assert_eq!(d.coeff(&[1]), Some(&q(2)));
        assert_eq!(d.coeff(&[0]), Some(&q(1)));
    }
}
