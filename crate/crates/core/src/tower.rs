//! Ramified p-adic towers `R_pi = W_f[x]/(x^e - p)` with `e = l^m`.
//!
//! `W_f` is the ring of Witt vectors of `F_{p^f}`, truncated at `p^K`. It is
//! presented as `Z/p^K[Y]/(g)`, where `Y` is the Teichmueller lift of a
//! primitive element of `F_{p^f}`. This makes the Frobenius `Y -> Y^p` exact
//! and puts `zeta_(l^m) = Y^((q-1)/l^m)` directly in the ring.
//!
//! An element of `R_pi` is `sum_{j<e} a_j pi^j` with `a_j` in `W_f`. Each element
//! carries its known precision in p-units. [`KElem`] extends this to the
//! fraction field by tracking a power-of-`p` denominator.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::util::{addmod, checked_pow, invmod, is_prime, mulmod, prime_factors, submod, vp_residue, vp_u64};
use crate::words::Word;

/// Coefficient storage. Inline for `f * e <= 8`.
pub type Coeffs = SmallVec<[u64; 8]>;

/// A p-adic valuation in `(1/e) Z`, or infinity for elements that vanish
/// at the working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(Ratio<i64>),
    Infinite,
}

impl Valuation {
    /// `self >= r`.
    pub fn at_least(&self, r: Ratio<i64>) -> bool {
        match self {
            Valuation::Infinite => true,
            Valuation::Finite(v) => *v >= r,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Valuation::Infinite => f64::INFINITY,
            Valuation::Finite(v) => *v.numer() as f64 / *v.denom() as f64,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Infinite => write!(f, "inf"),
            Valuation::Finite(v) => write!(f, "{}", v),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Element of `R_pi`, stored as `f * e` residues mod `p^prec`.
///
/// Coefficient `j * f + i` is the coordinate of `Y^i pi^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerElement {
    c: Coeffs,
    prec: u32,
}

impl TowerElement {
    /// Known precision in p-units.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Raw residues, `Y^i pi^j` at index `j * f + i`.
    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }
}

/// Element of the fraction field `K_pi`: `num / p^den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KElem {
    pub num: TowerElement,
    pub den: u32,
}

impl KElem {
    /// Absolute precision: the value is known modulo `p^(prec - den)`.
    pub fn abs_precision(&self) -> i64 {
        self.num.prec as i64 - self.den as i64
    }
}

/// Tower parameters as read from a config file. A missing `f` means the
/// least admissible unramified degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub p: u64,
    pub l: u64,
    pub m: u32,
    #[serde(default)]
    pub f: Option<usize>,
    #[serde(rename = "K")]
    pub k: u32,
}

impl TowerConfig {
    pub fn build(&self) -> Result<Arc<Tower>> {
        let f = match self.f {
            Some(f) => f,
            None => minimal_f(self.p, self.l, self.m)
                .ok_or_else(|| Error::InvalidTower(format!("no admissible f for l^m = {}^{}", self.l, self.m)))?,
        };
        Tower::new(self.p, self.l, self.m, f, self.k)
    }
}

/// JSON form of a tower element: `coeffs[j][i]` is the coordinate of `Y^i pi^j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub precision: u32,
    pub coeffs: Vec<Vec<u64>>,
}

/// A validated tower level together with its precomputed tables.
#[derive(Debug)]
pub struct Tower {
    p: u64,
    ell: u64,
    m: u32,
    f: usize,
    e: usize,
    k: u32,
    q: u64,
    modulus: u64,
    pow_p: Vec<u64>,
    /// Low coefficients of the monic modulus `g` of `W_f`.
    g: Vec<u64>,
    /// `frob[i]` is `Y^(p i) mod g`.
    frob: Vec<Coeffs>,
    /// `zeta_pow[j]` is `zeta^j` for `j < e`.
    zeta_pow: Vec<Coeffs>,
    n_pi: i64,
}

/// Multiply two polynomials of degree `< f` and reduce modulo the monic `g`.
fn poly_mulmod(a: &[u64], b: &[u64], g: &[u64], m: u64) -> Coeffs {
    let f = g.len();
    let mut r = vec![0u64; 2 * f.max(1) - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y != 0 {
                r[i + j] = addmod(r[i + j], mulmod(x, y, m), m);
            }
        }
    }
    for d in (f..r.len()).rev() {
        let c = r[d];
        if c != 0 {
            for i in 0..f {
                r[d - f + i] = submod(r[d - f + i], mulmod(c, g[i], m), m);
            }
        }
    }
    r.truncate(f);
    Coeffs::from_vec(r)
}

fn poly_powmod(a: &[u64], mut e: u64, g: &[u64], m: u64) -> Coeffs {
    let f = g.len();
    let mut r: Coeffs = smallvec![0; f];
    r[0] = 1 % m;
    let mut b: Coeffs = a.iter().copied().collect();
    while e > 0 {
        if e & 1 == 1 {
            r = poly_mulmod(&r, &b, g, m);
        }
        b = poly_mulmod(&b, &b, g, m);
        e >>= 1;
    }
    r
}

/// Monic degree-`f` polynomial over `F_p` whose root generates `F_{p^f}^*`.
fn primitive_polynomial(p: u64, f: usize) -> Vec<u64> {
    let q = p.pow(f as u32);
    let factors = prime_factors(q - 1);
    let mut x: Coeffs = smallvec![0; f];
    if f == 1 {
        // X is the constant -g_0 in the quotient; handled by the generic path.
    } else {
        x[1] = 1;
    }
    let total = q;
    for idx in 0..total {
        let mut g = vec![0u64; f];
        let mut t = idx;
        for c in g.iter_mut() {
            *c = t % p;
            t /= p;
        }
        if g[0] == 0 {
            continue;
        }
        let xx: Coeffs = if f == 1 { smallvec![(p - g[0]) % p] } else { x.clone() };
        let one = poly_powmod(&xx, q - 1, &g, p);
        if one[0] != 1 || one[1..].iter().any(|&c| c != 0) {
            continue;
        }
        let primitive = factors.iter().all(|&r| {
            let y = poly_powmod(&xx, (q - 1) / r, &g, p);
            !(y[0] == 1 && y[1..].iter().all(|&c| c == 0))
        });
        if primitive {
            return g;
        }
    }
    unreachable!("a primitive polynomial always exists")
}

impl Tower {
    /// Build the tower level `(p, l, m)` with unramified degree `f` and precision `p^K`.
    pub fn new(p: u64, ell: u64, m: u32, f: usize, k: u32) -> Result<Arc<Tower>> {
        if !is_prime(p) || p == 2 {
            return Err(Error::NotPrime(p));
        }
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        if ell == p {
            return Err(Error::InvalidTower("l must differ from p".into()));
        }
        if f == 0 || f > 8 {
            return Err(Error::InvalidTower(format!("unramified degree f = {f} out of range 1..=8")));
        }
        if k < 2 {
            return Err(Error::PrecisionTooLow(k));
        }
        let e64 = checked_pow(ell, m).ok_or_else(|| Error::InvalidTower("l^m overflows".into()))?;
        if e64 as usize * f > 64 {
            return Err(Error::InvalidTower(format!("f * l^m = {} is too large", e64 as usize * f)));
        }
        let e = e64 as usize;
        let q = checked_pow(p, f as u32)
            .filter(|&q| q < 1 << 40)
            .ok_or_else(|| Error::InvalidTower("p^f is too large".into()))?;
        if (q - 1) % e64 != 0 {
            return Err(Error::NotEisensteinCompatible { order: e64, group: q - 1 });
        }
        let modulus = checked_pow(p, k).filter(|&m| m < 1u64 << 62).ok_or(Error::PrecisionOverflow { p, k })?;
        let pow_p: Vec<u64> = (0..=k).map(|i| p.pow(i)).collect();

        // Teichmueller lift of a root of the primitive polynomial, then its
        // minimal polynomial over Z/p^K as the product over Frobenius conjugates.
        let gbar = primitive_polynomial(p, f);
        let glift: Vec<u64> = gbar.clone();
        let x: Coeffs = if f == 1 {
            smallvec![(modulus - glift[0]) % modulus]
        } else {
            let mut v: Coeffs = smallvec![0; f];
            v[1] = 1;
            v
        };
        let mut omega = x;
        for _ in 0..k {
            omega = poly_powmod(&omega, q, &glift, modulus);
        }
        let g = if f == 1 {
            vec![(modulus - omega[0]) % modulus]
        } else {
            // Polynomial in Y with coefficients in Z/p^K[X]/(glift).
            let mut poly: Vec<Coeffs> = vec![{
                let mut one: Coeffs = smallvec![0; f];
                one[0] = 1;
                one
            }];
            let mut root = omega.clone();
            for _ in 0..f {
                let mut next: Vec<Coeffs> = vec![smallvec![0; f]; poly.len() + 1];
                for (i, c) in poly.iter().enumerate() {
                    for t in 0..f {
                        next[i + 1][t] = addmod(next[i + 1][t], c[t], modulus);
                    }
                    let prod = poly_mulmod(c, &root, &glift, modulus);
                    for t in 0..f {
                        next[i][t] = submod(next[i][t], prod[t], modulus);
                    }
                }
                poly = next;
                root = poly_powmod(&root, p, &glift, modulus);
            }
            let mut g = Vec::with_capacity(f);
            for c in poly.iter().take(f) {
                if c[1..].iter().any(|&t| t != 0) {
                    return Err(Error::InvalidTower("minimal polynomial did not descend".into()));
                }
                g.push(c[0]);
            }
            g
        };

        let mut y: Coeffs = smallvec![0; f];
        if f == 1 {
            y[0] = (modulus - g[0]) % modulus;
        } else {
            y[1] = 1;
        }
        let y_p = poly_powmod(&y, p, &g, modulus);
        let mut frob = Vec::with_capacity(f);
        let mut cur: Coeffs = smallvec![0; f];
        cur[0] = 1;
        for _ in 0..f {
            frob.push(cur.clone());
            cur = poly_mulmod(&cur, &y_p, &g, modulus);
        }
        let zeta = poly_powmod(&y, (q - 1) / e64, &g, modulus);
        let mut zeta_pow = Vec::with_capacity(e);
        let mut z: Coeffs = smallvec![0; f];
        z[0] = 1;
        for _ in 0..e {
            zeta_pow.push(z.clone());
            z = poly_mulmod(&z, &zeta, &g, modulus);
        }
        Ok(Arc::new(Tower { p, ell, m, f, e, k, q, modulus, pow_p, g, frob, zeta_pow, n_pi: n_of_pi(p, e as u64) }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn ell(&self) -> u64 {
        self.ell
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn f(&self) -> usize {
        self.f
    }
    /// Ramification index `e = l^m`.
    pub fn e(&self) -> usize {
        self.e
    }
    /// Working precision `K`.
    pub fn precision(&self) -> u32 {
        self.k
    }
    /// Residue field size `q = p^f`.
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    /// `N(pi)`, the least integer with `v(pi^n / n) >= -N(pi)` for all `n >= 1`.
    pub fn n_of_pi(&self) -> i64 {
        self.n_pi
    }
    /// Rank of `R_pi` over `Z_p`.
    pub fn dim(&self) -> usize {
        self.f * self.e
    }
    /// Monic modulus of `W_f` as low coefficients.
    pub fn w_modulus(&self) -> &[u64] {
        &self.g
    }

    fn pmod(&self, prec: u32) -> u64 {
        self.pow_p[prec as usize]
    }

    fn reduce_coeffs(&self, mut c: Coeffs, prec: u32) -> TowerElement {
        let m = self.pmod(prec);
        for x in c.iter_mut() {
            *x %= m;
        }
        TowerElement { c, prec }
    }

    // ---- constructors ----

    pub fn zero(&self) -> TowerElement {
        TowerElement { c: smallvec![0; self.dim()], prec: self.k }
    }

    pub fn one(&self) -> TowerElement {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> TowerElement {
        let mut c: Coeffs = smallvec![0; self.dim()];
        let m = self.modulus as i128;
        c[0] = (n as i128).rem_euclid(m) as u64;
        TowerElement { c, prec: self.k }
    }

    /// The residue `r mod p^K` viewed as an element of `Z_p`.
    pub fn from_residue(&self, r: u64) -> TowerElement {
        let mut c: Coeffs = smallvec![0; self.dim()];
        c[0] = r % self.modulus;
        TowerElement { c, prec: self.k }
    }

    /// The residue of `a` when `a` lies in `Z_p`, i.e. has no `Y` or `pi` component.
    pub fn as_residue(&self, a: &TowerElement) -> Option<u64> {
        if a.c[1..].iter().all(|&x| x == 0) {
            Some(a.c[0])
        } else {
            None
        }
    }

    /// Element of `W_f` from coordinates in `1, Y, ..., Y^(f-1)`.
    pub fn from_w(&self, w: &[u64]) -> TowerElement {
        let mut c: Coeffs = smallvec![0; self.dim()];
        for (i, &x) in w.iter().enumerate().take(self.f) {
            c[i] = x % self.modulus;
        }
        TowerElement { c, prec: self.k }
    }

    /// Element from its raw coefficient vector (length `f * e`).
    pub fn from_coeffs(&self, coeffs: &[u64], prec: u32) -> Result<TowerElement> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", self.dim(), coeffs.len())));
        }
        Ok(self.reduce_coeffs(coeffs.iter().copied().collect(), prec.min(self.k)))
    }

    pub fn pi(&self) -> TowerElement {
        self.pi_pow(1)
    }

    /// `pi^j`, with `pi^e = p`.
    pub fn pi_pow(&self, j: usize) -> TowerElement {
        let mut c: Coeffs = smallvec![0; self.dim()];
        let (q, r) = (j / self.e, j % self.e);
        if (q as u32) < self.k {
            c[r * self.f] = self.pow_p[q];
        }
        TowerElement { c, prec: self.k }
    }

    /// The generator `Y` of `W_f`, a Teichmueller unit of order `q - 1`.
    pub fn gen_y(&self) -> TowerElement {
        let mut y: Coeffs = smallvec![0; self.f];
        if self.f == 1 {
            y[0] = (self.modulus - self.g[0]) % self.modulus;
        } else {
            y[1] = 1;
        }
        self.from_w(&y)
    }

    /// Primitive `l^m`-th root of unity in `W_f`.
    pub fn zeta(&self) -> TowerElement {
        self.from_w(&self.zeta_pow[1 % self.e])
    }

    /// `zeta^j`.
    pub fn zeta_pow(&self, j: u64) -> TowerElement {
        self.from_w(&self.zeta_pow[(j % self.e as u64) as usize])
    }

    /// Lower the known precision of `x` to `prec`.
    pub fn truncate(&self, x: &TowerElement, prec: u32) -> TowerElement {
        self.reduce_coeffs(x.c.clone(), prec.min(x.prec))
    }

    // ---- ring operations ----

    pub fn add(&self, a: &TowerElement, b: &TowerElement) -> TowerElement {
        let prec = a.prec.min(b.prec);
        let m = self.pmod(prec);
        let c = a.c.iter().zip(b.c.iter()).map(|(&x, &y)| addmod(x % m, y % m, m)).collect();
        TowerElement { c, prec }
    }

    pub fn sub(&self, a: &TowerElement, b: &TowerElement) -> TowerElement {
        let prec = a.prec.min(b.prec);
        let m = self.pmod(prec);
        let c = a.c.iter().zip(b.c.iter()).map(|(&x, &y)| submod(x, y, m)).collect();
        TowerElement { c, prec }
    }

    pub fn neg(&self, a: &TowerElement) -> TowerElement {
        let m = self.pmod(a.prec);
        let c = a.c.iter().map(|&x| if x == 0 { 0 } else { m - x }).collect();
        TowerElement { c, prec: a.prec }
    }

    pub fn scale_int(&self, a: &TowerElement, n: i64) -> TowerElement {
        let m = self.pmod(a.prec);
        if m == 1 {
            return a.clone();
        }
        let s = (n as i128).rem_euclid(m as i128) as u64;
        let c = a.c.iter().map(|&x| mulmod(x, s, m)).collect();
        TowerElement { c, prec: a.prec }
    }

    fn w_mul(&self, a: &[u64], b: &[u64]) -> Coeffs {
        if self.f == 1 {
            return smallvec![mulmod(a[0], b[0], self.modulus)];
        }
        poly_mulmod(a, b, &self.g, self.modulus)
    }

    pub fn mul(&self, a: &TowerElement, b: &TowerElement) -> TowerElement {
        let (f, e, md) = (self.f, self.e, self.modulus);
        let prec = a.prec.min(b.prec);
        let mut out: Coeffs = smallvec![0; f * e];
        if f == 1 {
            for j in 0..e {
                let x = a.c[j];
                if x == 0 {
                    continue;
                }
                for l in 0..e {
                    let y = b.c[l];
                    if y == 0 {
                        continue;
                    }
                    let mut t = mulmod(x, y, md);
                    let mut idx = j + l;
                    if idx >= e {
                        idx -= e;
                        t = mulmod(t, self.p, md);
                    }
                    out[idx] = addmod(out[idx], t, md);
                }
            }
        } else {
            for j in 0..e {
                let aj = &a.c[j * f..(j + 1) * f];
                if aj.iter().all(|&x| x == 0) {
                    continue;
                }
                for l in 0..e {
                    let bl = &b.c[l * f..(l + 1) * f];
                    if bl.iter().all(|&x| x == 0) {
                        continue;
                    }
                    let mut t = self.w_mul(aj, bl);
                    let mut idx = j + l;
                    if idx >= e {
                        idx -= e;
                        for x in t.iter_mut() {
                            *x = mulmod(*x, self.p, md);
                        }
                    }
                    for i in 0..f {
                        out[idx * f + i] = addmod(out[idx * f + i], t[i], md);
                    }
                }
            }
        }
        self.reduce_coeffs(out, prec)
    }

    pub fn pow(&self, a: &TowerElement, mut n: u64) -> TowerElement {
        let mut r = self.truncate(&self.one(), a.prec);
        let mut b = a.clone();
        while n > 0 {
            if n & 1 == 1 {
                r = self.mul(&r, &b);
            }
            n >>= 1;
            if n > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    pub fn is_zero(&self, a: &TowerElement) -> bool {
        a.c.iter().all(|&x| x == 0)
    }

    /// Equality modulo the smaller of the two precisions.
    pub fn eq(&self, a: &TowerElement, b: &TowerElement) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    /// Equality modulo `p^prec` (also capped by the operands' precision).
    pub fn eq_mod(&self, a: &TowerElement, b: &TowerElement, prec: u32) -> bool {
        let d = self.sub(a, b);
        self.is_zero(&self.truncate(&d, prec))
    }

    // ---- Frobenius lifts ----

    fn w_phi(&self, a: &[u64]) -> Coeffs {
        if self.f == 1 {
            return smallvec![a[0]];
        }
        let md = self.modulus;
        let mut out: Coeffs = smallvec![0; self.f];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (o, &t) in out.iter_mut().zip(self.frob[i].iter()) {
                *o = addmod(*o, mulmod(x, t, md), md);
            }
        }
        out
    }

    /// Frobenius lift `phi^(gamma)`: Frobenius on `W_f`, `pi -> zeta^gamma pi`.
    pub fn phi(&self, gamma: u64, a: &TowerElement) -> TowerElement {
        let f = self.f;
        let mut out: Coeffs = smallvec![0; f * self.e];
        for j in 0..self.e {
            let aj = &a.c[j * f..(j + 1) * f];
            if aj.iter().all(|&x| x == 0) {
                continue;
            }
            let fa = self.w_phi(aj);
            let z = &self.zeta_pow[((gamma % self.e as u64) as usize * j) % self.e];
            let t = self.w_mul(&fa, z);
            out[j * f..(j + 1) * f].copy_from_slice(&t);
        }
        self.reduce_coeffs(out, a.prec)
    }

    /// The automorphism `tau^k`: trivial on `W_f`, `pi -> zeta^k pi`.
    pub fn tau_pow(&self, k: u64, a: &TowerElement) -> TowerElement {
        let f = self.f;
        let mut out: Coeffs = smallvec![0; f * self.e];
        for j in 0..self.e {
            let aj = &a.c[j * f..(j + 1) * f];
            let z = &self.zeta_pow[((k % self.e as u64) as usize * j) % self.e];
            let t = self.w_mul(aj, z);
            out[j * f..(j + 1) * f].copy_from_slice(&t);
        }
        self.reduce_coeffs(out, a.prec)
    }

    /// Exact division by `pi`. Loses one p-unit of precision.
    pub fn div_pi(&self, a: &TowerElement) -> Result<TowerElement> {
        let f = self.f;
        if a.prec == 0 {
            return Err(Error::PrecisionExhausted("division by pi at precision 0".into()));
        }
        if a.c[..f].iter().any(|&x| x % self.p != 0) {
            return Err(Error::NotDivisible);
        }
        let mut out: Coeffs = smallvec![0; f * self.e];
        for j in 1..self.e {
            out[(j - 1) * f..j * f].copy_from_slice(&a.c[j * f..(j + 1) * f]);
        }
        for i in 0..f {
            out[(self.e - 1) * f + i] = a.c[i] / self.p;
        }
        Ok(self.reduce_coeffs(out, a.prec - 1))
    }

    /// Exact division by `p`. Loses one p-unit of precision.
    pub fn div_p(&self, a: &TowerElement) -> Result<TowerElement> {
        if a.prec == 0 {
            return Err(Error::PrecisionExhausted("division by p at precision 0".into()));
        }
        if a.c.iter().any(|&x| x % self.p != 0) {
            return Err(Error::NotDivisible);
        }
        let c = a.c.iter().map(|&x| x / self.p).collect();
        Ok(self.reduce_coeffs(c, a.prec - 1))
    }

    /// Multiply by `pi^k` for any `k`.
    pub fn mul_pi_pow(&self, a: &TowerElement, k: usize) -> TowerElement {
        self.mul(a, &self.pi_pow(k))
    }

    /// The pi-derivation `delta(a) = (phi^(gamma)(a) - a^p) / pi`.
    pub fn pi_derivation(&self, gamma: u64, a: &TowerElement) -> Result<TowerElement> {
        if a.prec < 2 {
            return Err(Error::PrecisionExhausted(format!("delta of an element known mod p^{}", a.prec)));
        }
        let d = self.sub(&self.phi(gamma, a), &self.pow(a, self.p));
        self.div_pi(&d)
    }

    // ---- valuation, units ----

    /// Integer pi-adic valuation, or `None` when `a` vanishes at its precision.
    pub fn val_pi(&self, a: &TowerElement) -> Option<u64> {
        let f = self.f;
        let mut best: Option<u64> = None;
        for j in 0..self.e {
            for i in 0..f {
                let x = a.c[j * f + i];
                if x != 0 {
                    let v = vp_residue(x, self.p, a.prec) as u64 * self.e as u64 + j as u64;
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        best
    }

    /// p-adic valuation normalised by `v(p) = 1`.
    pub fn valuation(&self, a: &TowerElement) -> Valuation {
        match self.val_pi(a) {
            None => Valuation::Infinite,
            Some(v) => Valuation::Finite(Ratio::new(v as i64, self.e as i64)),
        }
    }

    pub fn is_unit(&self, a: &TowerElement) -> bool {
        a.prec > 0 && a.c[..self.f].iter().any(|&x| x % self.p != 0)
    }

    /// Inverse of a unit by Newton iteration from the residue inverse.
    pub fn inv(&self, a: &TowerElement) -> Result<TowerElement> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit);
        }
        let a0 = &a.c[..self.f];
        // a0^(q-2) inverts a0 modulo p because a0^(q-1) = 1 mod p.
        let x0 = poly_powmod_w(self, a0, self.q - 2);
        let mut x = self.from_w(&x0);
        let target = self.e as u64 * a.prec as u64;
        let mut have = 1u64;
        let two = self.from_int(2);
        while have < target {
            let ax = self.mul(a, &x);
            x = self.mul(&x, &self.sub(&two, &ax));
            have *= 2;
        }
        Ok(self.truncate(&x, a.prec))
    }

    /// Teichmueller representative of the residue class of a unit of `W_f`.
    pub fn teichmuller(&self, a: &TowerElement) -> Result<TowerElement> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit);
        }
        let mut w: Coeffs = a.c[..self.f].iter().copied().collect();
        for _ in 0..self.k {
            w = poly_powmod_w(self, &w, self.q);
        }
        Ok(self.from_w(&w))
    }

    /// All `q - 1` Teichmueller units, as powers of `Y`.
    pub fn teichmuller_units(&self) -> Vec<TowerElement> {
        let y = self.gen_y();
        let mut out = Vec::with_capacity((self.q - 1) as usize);
        let mut cur = self.one();
        for _ in 0..self.q - 1 {
            out.push(cur.clone());
            cur = self.mul(&cur, &y);
        }
        out
    }

    // ---- random sampling ----

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerElement {
        let c = (0..self.dim()).map(|_| rng.gen_range(0..self.modulus)).collect();
        TowerElement { c, prec: self.k }
    }

    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerElement {
        loop {
            let x = self.random_element(rng);
            if self.is_unit(&x) {
                return x;
            }
        }
    }

    /// Random element of the maximal ideal (multiple of `pi`).
    pub fn random_nonunit<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerElement {
        let x = self.random_element(rng);
        self.mul(&x, &self.pi())
    }

    /// Random element of `W_f`.
    pub fn random_w<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerElement {
        let w: Vec<u64> = (0..self.f).map(|_| rng.gen_range(0..self.modulus)).collect();
        self.from_w(&w)
    }

    /// Human readable form `sum a_j pi^j`, each `a_j` as a coordinate list.
    pub fn format(&self, a: &TowerElement) -> String {
        let mut parts = Vec::new();
        for j in 0..self.e {
            let aj = &a.c[j * self.f..(j + 1) * self.f];
            if aj.iter().all(|&x| x == 0) {
                continue;
            }
            let w = if self.f == 1 { aj[0].to_string() } else { format!("{:?}", aj) };
            parts.push(if j == 0 { w } else { format!("{w}*pi^{j}") });
        }
        if parts.is_empty() {
            format!("O(p^{})", a.prec)
        } else {
            format!("{} + O(p^{})", parts.join(" + "), a.prec)
        }
    }

    pub fn to_json(&self, a: &TowerElement) -> ElementJson {
        ElementJson { precision: a.prec, coeffs: a.c.chunks(self.f).map(|c| c.to_vec()).collect() }
    }

    pub fn from_json(&self, j: &ElementJson) -> Result<TowerElement> {
        if j.coeffs.len() != self.e || j.coeffs.iter().any(|r| r.len() != self.f) {
            return Err(Error::Dimension(format!("expected {} rows of {} coefficients", self.e, self.f)));
        }
        let flat: Vec<u64> = j.coeffs.iter().flatten().copied().collect();
        self.from_coeffs(&flat, j.precision)
    }

    // ---- fraction field ----

    pub fn k_from(&self, a: &TowerElement) -> KElem {
        KElem { num: a.clone(), den: 0 }
    }

    pub fn k_int(&self, n: i64) -> KElem {
        self.k_normalize(KElem { num: self.from_int(n), den: 0 })
    }

    /// `n / d` for integers with `d` a `p`-adic unit times a power of `p`.
    pub fn k_rational(&self, n: i64, d: i64) -> Result<KElem> {
        if d == 0 {
            return Err(Error::DivisionByZero);
        }
        let v = vp_u64(d.unsigned_abs(), self.p);
        let u = d / (self.p as i64).pow(v);
        let ui = self.inv(&self.from_int(u))?;
        Ok(self.k_normalize(KElem { num: self.mul(&self.from_int(n), &ui), den: v }))
    }

    /// Image of an exact rational number in `K_pi`.
    pub fn k_from_bigrational(&self, q: &num_rational::BigRational) -> Result<KElem> {
        use num_bigint::BigInt;
        use num_traits::{ToPrimitive, Zero};
        if q.denom().is_zero() {
            return Err(Error::DivisionByZero);
        }
        let pb = BigInt::from(self.p);
        let mut d = q.denom().clone();
        let mut v = 0u32;
        while (&d % &pb).is_zero() {
            d /= &pb;
            v += 1;
        }
        let mb = BigInt::from(self.modulus);
        let red = |x: &BigInt| -> u64 {
            let r = ((x % &mb) + &mb) % &mb;
            r.to_u64().expect("reduced below modulus")
        };
        let dinv = invmod(red(&d), self.modulus).ok_or(Error::NotUnit)?;
        let n = mulmod(red(q.numer()), dinv, self.modulus);
        Ok(self.k_normalize(KElem { num: self.from_residue(n), den: v }))
    }

    pub fn k_zero(&self) -> KElem {
        KElem { num: self.zero(), den: 0 }
    }

    /// Strip common factors of `p` from numerator and denominator.
    pub fn k_normalize(&self, mut x: KElem) -> KElem {
        while x.den > 0 && x.num.prec > 0 && x.num.c.iter().all(|&c| c % self.p == 0) {
            x.num = self.div_p(&x.num).expect("checked divisibility");
            x.den -= 1;
        }
        x
    }

    fn k_align(&self, x: &KElem, den: u32) -> TowerElement {
        let s = den - x.den;
        if s == 0 {
            return x.num.clone();
        }
        let prec = (x.num.prec + s).min(self.k);
        let sp = if s >= self.k { 0 } else { self.pow_p[s as usize] };
        let c = x.num.c.iter().map(|&c| mulmod(c, sp, self.modulus)).collect();
        self.reduce_coeffs(c, prec)
    }

    pub fn k_add(&self, a: &KElem, b: &KElem) -> KElem {
        let d = a.den.max(b.den);
        let s = self.add(&self.k_align(a, d), &self.k_align(b, d));
        self.k_normalize(KElem { num: s, den: d })
    }

    pub fn k_sub(&self, a: &KElem, b: &KElem) -> KElem {
        let d = a.den.max(b.den);
        let s = self.sub(&self.k_align(a, d), &self.k_align(b, d));
        self.k_normalize(KElem { num: s, den: d })
    }

    pub fn k_neg(&self, a: &KElem) -> KElem {
        KElem { num: self.neg(&a.num), den: a.den }
    }

    pub fn k_mul(&self, a: &KElem, b: &KElem) -> KElem {
        self.k_normalize(KElem { num: self.mul(&a.num, &b.num), den: a.den + b.den })
    }

    pub fn k_scale_int(&self, a: &KElem, n: i64) -> KElem {
        self.k_normalize(KElem { num: self.scale_int(&a.num, n), den: a.den })
    }

    /// Multiply by `p^k` for `k` possibly negative.
    pub fn k_mul_p_pow(&self, a: &KElem, k: i64) -> KElem {
        if k >= 0 {
            let mut x = a.clone();
            let mut left = k;
            while left > 0 && x.den > 0 {
                x.den -= 1;
                left -= 1;
            }
            if left > 0 {
                let sp = if left as u32 >= self.k { 0 } else { self.pow_p[left as usize] };
                x.num = self.scale_int(&x.num, sp as i64);
            }
            self.k_normalize(x)
        } else {
            KElem { num: a.num.clone(), den: a.den + (-k) as u32 }
        }
    }

    pub fn k_phi(&self, gamma: u64, a: &KElem) -> KElem {
        KElem { num: self.phi(gamma, &a.num), den: a.den }
    }

    pub fn k_valuation(&self, a: &KElem) -> Valuation {
        match self.valuation(&a.num) {
            Valuation::Infinite => Valuation::Infinite,
            Valuation::Finite(v) => Valuation::Finite(v - Ratio::from_integer(a.den as i64)),
        }
    }

    pub fn k_is_zero(&self, a: &KElem) -> bool {
        self.is_zero(&a.num)
    }

    /// Inverse in `K_pi`; errors when `a` vanishes at its precision.
    pub fn k_inv(&self, a: &KElem) -> Result<KElem> {
        let j = self.val_pi(&a.num).ok_or(Error::DivisionByZero)? as usize;
        let e = self.e;
        let c = j.div_ceil(e);
        let shift = e * c - j;
        // num * pi^shift = p^c * u with u a unit.
        let mut t = self.mul_pi_pow(&a.num, shift);
        for _ in 0..c {
            t = self.div_p(&t)?;
        }
        let uinv = self.inv(&t)?;
        let num = self.mul_pi_pow(&uinv, shift);
        let prec = num.prec;
        let num = self.truncate(&num, prec);
        let x = KElem { num, den: c as u32 };
        Ok(self.k_mul_p_pow(&x, a.den as i64))
    }

    pub fn k_div(&self, a: &KElem, b: &KElem) -> Result<KElem> {
        Ok(self.k_mul(a, &self.k_inv(b)?))
    }

    /// The element if it is integral, otherwise `NotIntegral`.
    pub fn k_to_integral(&self, a: &KElem) -> Option<TowerElement> {
        let a = self.k_normalize(a.clone());
        if a.den == 0 {
            Some(a.num)
        } else if self.is_zero(&a.num) {
            Some(self.truncate(&self.zero(), (a.num.prec).saturating_sub(a.den)))
        } else {
            None
        }
    }

    pub fn k_format(&self, a: &KElem) -> String {
        if a.den == 0 {
            self.format(&a.num)
        } else {
            format!("({}) / p^{}", self.format(&a.num), a.den)
        }
    }
}

fn poly_powmod_w(t: &Tower, a: &[u64], e: u64) -> Coeffs {
    if t.f == 1 {
        return smallvec![crate::util::powmod(a[0], e, t.modulus)];
    }
    poly_powmod(a, e, &t.g, t.modulus)
}

/// `N(pi)` for a uniformiser of ramification index `e` over `Q_p`:
/// `max_{kappa >= 0} ceil(kappa - p^kappa / e)`.
///
/// Since `v_p(pi^n / n) = n / e - v_p(n)` is minimised over `n` with
/// `v_p(n) = kappa` at `n = p^kappa`, this is the least integer `N` with
/// `v_p(pi^n / n) >= -N` for every `n >= 1`.
pub fn n_of_pi(p: u64, e: u64) -> i64 {
    let mut best = i64::MIN;
    let mut pk: u128 = 1;
    for kappa in 0..64i64 {
        // ceil(kappa - pk/e) = kappa - floor(pk/e)
        let val = kappa - (pk / e as u128) as i64;
        best = best.max(val);
        if pk > (e as u128) * 128 {
            break;
        }
        pk *= p as u128;
    }
    best
}

/// Brute-force `N(pi)`: `ceil(max_{n <= nmax} (v_p(n) - n/e))`.
pub fn n_of_pi_bruteforce(p: u64, e: u64, nmax: u64) -> i64 {
    let mut best: Ratio<i64> = Ratio::from_integer(i64::MIN / 4);
    for n in 1..=nmax {
        let v = Ratio::new(vp_u64(n, p) as i64 * e as i64 - n as i64, e as i64);
        if v > best {
            best = v;
        }
    }
    best.ceil().to_integer()
}

/// The pi-adic version of `N`, from the zero-counting argument:
/// `-N = min_{kappa >= 0} (p^kappa - kappa e)`, the least pi-adic valuation
/// of `pi^m / m`. Returns `N` and the exponents `p^kappa` of the reduced
/// polynomial `S(z)` (the minimising `kappa`).
pub fn n_pi_adic(p: u64, e: u64) -> (i64, Vec<u64>) {
    let mut vals = Vec::new();
    let mut pk: u128 = 1;
    let mut kappa: i128 = 0;
    loop {
        let v = pk as i128 - kappa * e as i128;
        vals.push((v, pk as u64));
        // p^x - e x is convex, so stop once it has started to increase.
        if vals.len() >= 2 && v > vals[vals.len() - 2].0 {
            break;
        }
        pk *= p as u128;
        kappa += 1;
    }
    let min = vals.iter().map(|x| x.0).min().expect("nonempty");
    let exps = vals.iter().filter(|x| x.0 == min).map(|x| x.1).collect();
    (-(min as i64), exps)
}

/// A family of Frobenius lifts `phi_i = phi^(gamma_i)` on one tower level.
#[derive(Clone, Debug)]
pub struct FrobeniusFamily {
    pub tower: Arc<Tower>,
    pub gammas: Vec<u64>,
}

impl FrobeniusFamily {
    pub fn new(tower: Arc<Tower>, gammas: Vec<u64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Invalid("at least one Frobenius lift is required".into()));
        }
        Ok(FrobeniusFamily { tower, gammas })
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    fn gamma(&self, letter: u8) -> Result<u64> {
        let i = letter as usize;
        if i == 0 || i > self.gammas.len() {
            return Err(Error::BadLetter { letter, n: self.gammas.len() });
        }
        Ok(self.gammas[i - 1])
    }

    /// `phi_i(a)` for a letter `i` in `1..=n`.
    pub fn phi(&self, letter: u8, a: &TowerElement) -> Result<TowerElement> {
        Ok(self.tower.phi(self.gamma(letter)?, a))
    }

    /// `phi_mu(a) = phi_{i1}(phi_{i2}(... phi_{ir}(a)))`.
    pub fn phi_word(&self, w: &Word, a: &TowerElement) -> Result<TowerElement> {
        let mut x = a.clone();
        for &l in w.letters().iter().rev() {
            x = self.tower.phi(self.gamma(l)?, &x);
        }
        Ok(x)
    }

    pub fn phi_word_k(&self, w: &Word, a: &KElem) -> Result<KElem> {
        Ok(KElem { num: self.phi_word(w, &a.num)?, den: a.den })
    }

    pub fn phi_k(&self, letter: u8, a: &KElem) -> Result<KElem> {
        Ok(KElem { num: self.phi(letter, &a.num)?, den: a.den })
    }

    /// `delta_i(a)`.
    pub fn delta(&self, letter: u8, a: &TowerElement) -> Result<TowerElement> {
        self.tower.pi_derivation(self.gamma(letter)?, a)
    }

    /// `delta_mu(a) = delta_{i1}(delta_{i2}(... delta_{ir}(a)))`.
    pub fn delta_word(&self, w: &Word, a: &TowerElement) -> Result<TowerElement> {
        let mut x = a.clone();
        for &l in w.letters().iter().rev() {
            x = self.delta(l, &x)?;
        }
        Ok(x)
    }
}

/// The word acting as `tau^E phi^s` on the full tower.
#[derive(Clone, Debug, Serialize)]
pub struct WordAction {
    pub word: String,
    pub length: usize,
    /// `E = gamma_{i1} + p gamma_{i2} + ... + p^(s-1) gamma_{is}`.
    pub exponent_sum: u128,
}

/// Result of the monomial independence test.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub independent: bool,
    pub actions: Vec<WordAction>,
    /// Pairs of distinct words inducing the same automorphism of the full tower.
    pub collisions: Vec<(String, String)>,
    /// Pairs that agree on `pi` and `W_f` at the given finite level only.
    pub finite_level_collisions: Vec<(String, String)>,
}

/// Decide whether `phi^(gamma_1), ..., phi^(gamma_n)` are monomially independent
/// up to words of length `r`.
///
/// On the tower, a word `i1...is` acts as `tau^E phi^s` with `E` the digit sum
/// `gamma_{i1} + p gamma_{i2} + ...`. Since `tau` and `phi` have infinite order
/// on the full tower, two words agree exactly when their lengths and exponent
/// sums agree. The finite level `tower` (if given) is compared as well, and
/// its coincidences are reported separately.
pub fn monomial_independence(gammas: &[u64], p: u64, r: usize, tower: Option<&Tower>) -> Result<IndependenceReport> {
    if gammas.is_empty() {
        return Err(Error::Invalid("empty gamma list".into()));
    }
    let words = crate::words::words_up_to(gammas.len(), r);
    let mut actions = Vec::with_capacity(words.len());
    for w in &words {
        let mut e: u128 = 0;
        let mut pk: u128 = 1;
        for &l in w.letters() {
            let g = gammas[l as usize - 1] as u128;
            e = g
                .checked_mul(pk)
                .and_then(|t| t.checked_add(e))
                .ok_or_else(|| Error::Invalid("exponent sum overflow".into()))?;
            pk = pk.checked_mul(p as u128).ok_or_else(|| Error::Invalid("exponent sum overflow".into()))?;
        }
        actions.push(WordAction { word: w.to_string(), length: w.len(), exponent_sum: e });
    }
    let mut collisions = Vec::new();
    let mut finite = Vec::new();
    for i in 0..actions.len() {
        for j in i + 1..actions.len() {
            let (a, b) = (&actions[i], &actions[j]);
            if a.length == b.length && a.exponent_sum == b.exponent_sum {
                collisions.push((a.word.clone(), b.word.clone()));
            }
            if let Some(t) = tower {
                let e = t.e() as u128;
                let same_tau = a.exponent_sum % e == b.exponent_sum % e;
                let same_phi = t.f() == 1 || (a.length % t.f()) == (b.length % t.f());
                if same_tau && same_phi {
                    finite.push((a.word.clone(), b.word.clone()));
                }
            }
        }
    }
    Ok(IndependenceReport { independent: collisions.is_empty(), actions, collisions, finite_level_collisions: finite })
}

/// Check `phi tau = tau^p phi` on `pi`, `zeta` and the generator of `W_f`.
pub fn check_tau_relation(t: &Tower, gamma: u64) -> bool {
    let p = t.p();
    [t.pi(), t.zeta(), t.gen_y(), t.add(&t.pi(), &t.gen_y())].iter().all(|x| {
        let lhs = t.phi(gamma, &t.tau_pow(1, x));
        let rhs = t.tau_pow(p, &t.phi(gamma, x));
        t.eq(&lhs, &rhs)
    })
}

/// Multiplicative order of `p` modulo `l^m`: the least `f` with `l^m | p^f - 1`.
pub fn minimal_f(p: u64, ell: u64, m: u32) -> Option<usize> {
    let n = checked_pow(ell, m)?;
    if n == 1 {
        return Some(1);
    }
    let mut x = p % n;
    for f in 1..=64 {
        if x == 1 {
            return Some(f);
        }
        x = crate::util::mulmod(x, p, n);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_basics() {
        let t = Tower::new(7, 2, 2, 2, 10).unwrap();
        assert_eq!(t.e(), 4);
        let pi = t.pi();
        assert!(t.eq(&t.pow(&pi, 4), &t.from_int(7)));
        let z = t.zeta();
        assert!(t.eq(&t.pow(&z, 4), &t.one()));
        assert!(!t.eq(&t.pow(&z, 2), &t.one()));
    }

    #[test]
    fn unramified_degree_two() {
        let t = Tower::new(5, 3, 1, 2, 8).unwrap();
        let y = t.gen_y();
        assert!(t.eq(&t.pow(&y, 24), &t.one()));
        assert!(!t.eq(&t.pow(&y, 12), &t.one()));
        // Frobenius is a ring map of order 2 on W_2.
        let a = t.add(&y, &t.from_int(3));
        let b = t.mul(&y, &y);
        assert!(t.eq(&t.phi(0, &t.mul(&a, &b)), &t.mul(&t.phi(0, &a), &t.phi(0, &b))));
        assert!(t.eq(&t.phi(0, &t.phi(0, &a)), &a));
    }

    #[test]
    fn n_of_pi_values() {
        assert_eq!(n_of_pi(5, 1), -1);
        assert_eq!(n_of_pi(3, 2), 0);
        assert_eq!(n_of_pi(7, 4), 0);
    }

    #[test]
    fn inverse_of_non_unit_in_k() {
        let t = Tower::new(7, 2, 2, 2, 10).unwrap();
        let pi = t.k_from(&t.pi());
        let inv = t.k_inv(&pi).unwrap();
        let one = t.k_mul(&pi, &inv);
        assert!(t.k_is_zero(&t.k_sub(&one, &t.k_int(1))));
    }

    #[test]
    fn independence_examples() {
        assert!(monomial_independence(&[0, 1], 7, 2, None).unwrap().independent);
        assert!(!monomial_independence(&[0, 0], 7, 1, None).unwrap().independent);
    }
}
