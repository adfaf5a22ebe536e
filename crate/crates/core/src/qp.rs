//! p-adic numbers with arbitrary precision and honest precision tracking.
//!
//! A value is `p^val * unit`, known modulo `p^prec` (absolute precision).
//! Zero at precision `prec` is stored as `val = prec`, `unit = 0`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Padic {
    pub val: i64,
    pub unit: BigInt,
    pub prec: i64,
}

impl Padic {
    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// `val` when nonzero; `None` for zero at the known precision.
    pub fn valuation(&self) -> Option<i64> {
        if self.unit.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }
}

/// Arithmetic context for a fixed prime.
#[derive(Clone, Debug)]
pub struct Qp {
    p: u64,
    pb: BigInt,
    pows: Vec<BigInt>,
}

impl Qp {
    pub fn new(p: u64, max_prec: usize) -> Qp {
        let pb = BigInt::from(p);
        let mut pows = Vec::with_capacity(max_prec + 1);
        let mut x = BigInt::one();
        for _ in 0..=max_prec {
            pows.push(x.clone());
            x *= &pb;
        }
        Qp { p, pb, pows }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn pow_p(&self, k: i64) -> BigInt {
        let k = k.max(0) as usize;
        if k < self.pows.len() {
            self.pows[k].clone()
        } else {
            self.pb.pow(k as u32)
        }
    }

    fn normalize(&self, mut v: i64, mut n: BigInt, prec: i64) -> Padic {
        if n.is_zero() || v >= prec {
            return self.zero(prec);
        }
        while v < prec {
            let (q, r) = n.div_rem(&self.pb);
            if !r.is_zero() {
                break;
            }
            n = q;
            v += 1;
        }
        if v >= prec {
            return self.zero(prec);
        }
        let m = self.pow_p(prec - v);
        let unit = n.mod_floor(&m);
        Padic { val: v, unit, prec }
    }

    pub fn zero(&self, prec: i64) -> Padic {
        Padic { val: prec, unit: BigInt::zero(), prec }
    }

    pub fn from_bigint(&self, n: &BigInt, prec: i64) -> Padic {
        self.normalize(0, n.clone(), prec)
    }

    pub fn from_int(&self, n: i64, prec: i64) -> Padic {
        self.normalize(0, BigInt::from(n), prec)
    }

    pub fn add(&self, a: &Padic, b: &Padic) -> Padic {
        let prec = a.prec.min(b.prec);
        if a.is_zero() {
            return self.cap(b, prec);
        }
        if b.is_zero() {
            return self.cap(a, prec);
        }
        let v = a.val.min(b.val);
        let n = &a.unit * self.pow_p(a.val - v) + &b.unit * self.pow_p(b.val - v);
        self.normalize(v, n, prec)
    }

    pub fn neg(&self, a: &Padic) -> Padic {
        if a.is_zero() {
            return a.clone();
        }
        self.normalize(a.val, -&a.unit, a.prec)
    }

    pub fn sub(&self, a: &Padic, b: &Padic) -> Padic {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Padic, b: &Padic) -> Padic {
        let prec = (a.val + b.prec).min(b.val + a.prec);
        if a.is_zero() || b.is_zero() {
            return self.zero(prec);
        }
        self.normalize(a.val + b.val, &a.unit * &b.unit, prec)
    }

    /// Lower the precision to `prec`.
    pub fn cap(&self, a: &Padic, prec: i64) -> Padic {
        if prec >= a.prec {
            return a.clone();
        }
        self.normalize(a.val, a.unit.clone(), prec)
    }

    /// Multiply by an exact integer.
    pub fn mul_int(&self, a: &Padic, d: &BigInt) -> Padic {
        if d.is_zero() {
            return self.zero(i64::MAX / 4);
        }
        let (w, u) = self.split(d);
        if a.is_zero() {
            return self.zero(a.prec + w);
        }
        self.normalize(a.val + w, &a.unit * u, a.prec + w)
    }

    /// Divide by a nonzero exact integer; precision drops by `v_p(d)`.
    pub fn div_int(&self, a: &Padic, d: &BigInt) -> Result<Padic> {
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (w, u) = self.split(d);
        if a.is_zero() {
            return Ok(self.zero(a.prec - w));
        }
        let m = self.pow_p(a.prec - a.val);
        let ui = inv_big(&u, &m).ok_or(Error::NotUnit)?;
        Ok(self.normalize(a.val - w, &a.unit * ui, a.prec - w))
    }

    /// `a / b` for `b` nonzero at its precision.
    pub fn div(&self, a: &Padic, b: &Padic) -> Result<Padic> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let relb = b.prec - b.val;
        let prec = if a.is_zero() { a.prec - b.val } else { (a.prec - b.val).min(a.val - b.val + relb) };
        if a.is_zero() {
            return Ok(self.zero(prec));
        }
        let m = self.pow_p((prec - (a.val - b.val)).max(1));
        let ui = inv_big(&b.unit, &m).ok_or(Error::NotUnit)?;
        Ok(self.normalize(a.val - b.val, &a.unit * ui, prec))
    }

    /// `(v_p(d), d / p^v_p(d))`.
    fn split(&self, d: &BigInt) -> (i64, BigInt) {
        let mut u = d.clone();
        let mut w = 0;
        loop {
            let (q, r) = u.div_rem(&self.pb);
            if !r.is_zero() {
                break;
            }
            u = q;
            w += 1;
        }
        (w, u)
    }

    /// Representative in `[0, p^k)` of `a mod p^k`; `a` must be integral and known to `p^k`.
    pub fn residue(&self, a: &Padic, k: i64) -> Result<BigInt> {
        if a.prec < k {
            return Err(Error::PrecisionExhausted(format!("known to p^{}, need p^{k}", a.prec)));
        }
        if a.is_zero() {
            return Ok(BigInt::zero());
        }
        if a.val < 0 {
            return Err(Error::IntegralityViolation(format!("valuation {}", a.val)));
        }
        Ok((&a.unit * self.pow_p(a.val)).mod_floor(&self.pow_p(k)))
    }

    /// Signed representative in `(-p^k/2, p^k/2]`, as `i128` when it fits.
    pub fn balanced(&self, a: &Padic, k: i64) -> Result<i128> {
        let r = self.residue(a, k)?;
        let m = self.pow_p(k);
        let half: BigInt = &m / 2;
        let s = if r > half { r - m } else { r };
        s.to_i128().ok_or_else(|| Error::Invalid("residue does not fit".into()))
    }
}

fn inv_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.abs().is_one() {
        return None;
    }
    Some((e.x * e.gcd.signum()).mod_floor(m))
}
