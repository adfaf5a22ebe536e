//! Frobenius on the de Rham cohomology of an ordinary elliptic curve over
//! `Z_p`, computed by Monsky-Washnitzer reduction, and the crystalline
//! classes `f_mu`, `f_{mu,nu}` read off from it.
//!
//! Basis: `omega = dx/y`, `eta = x dx/y`, with `<omega, eta> = 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qp::{Padic, Qp};
use crate::symbol::FTable;
use crate::tower::{KElem, Tower};
use crate::util::{checked_pow, is_prime, mulmod, powmod, submod};
use crate::words::{nonempty_words_up_to, Word};

/// A curve of the built-in catalog.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogCurve {
    pub label: &'static str,
    pub p: u64,
    pub a4: i64,
    pub a6: i64,
}

/// Test curves. The first five are ordinary and not canonical lifts, the
/// `cm` entries are `y^2 = x^3 + x` at primes `1 mod 4`, and the `ss`
/// entries are supersingular.
pub const CATALOG: &[CatalogCurve] = &[
    CatalogCurve { label: "5a", p: 5, a4: 1, a6: 1 },
    CatalogCurve { label: "7a", p: 7, a4: 1, a6: 3 },
    CatalogCurve { label: "11a", p: 11, a4: 2, a6: 7 },
    CatalogCurve { label: "5b", p: 5, a4: 2, a6: 1 },
    CatalogCurve { label: "7b", p: 7, a4: 3, a6: 2 },
    CatalogCurve { label: "5cm", p: 5, a4: 1, a6: 0 },
    CatalogCurve { label: "13cm", p: 13, a4: 1, a6: 0 },
    CatalogCurve { label: "5ss", p: 5, a4: 0, a6: 1 },
    CatalogCurve { label: "11ss", p: 11, a4: 1, a6: 0 },
];

/// Look up a catalog curve by label or by `catalog#k` (1-based).
pub fn catalog_curve(name: &str) -> Result<&'static CatalogCurve> {
    if let Some(k) = name.strip_prefix("catalog#") {
        let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad catalog index {k:?}")))?;
        return CATALOG.get(k.wrapping_sub(1)).ok_or_else(|| Error::Invalid(format!("no catalog entry {k}")));
    }
    CATALOG.iter().find(|c| c.label == name).ok_or_else(|| Error::Invalid(format!("unknown curve {name:?}")))
}

fn check_curve(p: u64, a4: i64, a6: i64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p < 5 {
        return Err(Error::Invalid("p must be at least 5".into()));
    }
    let pi = p as i128;
    let d = (4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2)).rem_euclid(pi);
    if d == 0 {
        return Err(Error::BadReduction);
    }
    Ok(())
}

/// `a_p = p + 1 - #E(F_p)` by counting points.
pub fn count_points_ap(p: u64, a4: i64, a6: i64) -> Result<i64> {
    check_curve(p, a4, a6)?;
    let a = a4.rem_euclid(p as i64) as u64;
    let b = a6.rem_euclid(p as i64) as u64;
    let mut s: i64 = 0;
    for x in 0..p {
        let v = (mulmod(mulmod(x, x, p), x, p) + mulmod(a, x, p) + b) % p;
        if v != 0 {
            s += if powmod(v, (p - 1) / 2, p) == 1 { 1 } else { -1 };
        }
    }
    Ok(-s)
}

/// Frobenius on `H^1_dR` with its certification data.
#[derive(Clone, Debug, Serialize)]
pub struct DeRhamData {
    pub p: u64,
    pub a4: i64,
    pub a6: i64,
    /// Entries are certified modulo `p^precision`.
    pub precision: u32,
    /// `frob[r][c]`: coordinate `r` of `F(basis_c)`, as residues mod `p^precision`.
    pub frob: [[u64; 2]; 2],
    pub ap: i64,
    /// Gram matrix of the cup product in the basis `omega, eta`.
    pub pairing: [[i64; 2]; 2],
    /// Number of terms of the Frobenius expansion that were kept.
    pub terms: usize,
}

impl DeRhamData {
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.precision)
    }

    pub fn trace(&self) -> u64 {
        (self.frob[0][0] + self.frob[1][1]) % self.modulus()
    }

    pub fn det(&self) -> u64 {
        let m = self.modulus();
        submod(mulmod(self.frob[0][0], self.frob[1][1], m), mulmod(self.frob[0][1], self.frob[1][0], m), m)
    }

    fn residue(&self, n: i64) -> u64 {
        (n as i128).rem_euclid(self.modulus() as i128) as u64
    }

    pub fn trace_matches_ap(&self) -> bool {
        self.trace() == self.residue(self.ap)
    }

    pub fn det_is_p(&self) -> bool {
        self.det() == self.p % self.modulus()
    }

    /// The cup product of coordinate vectors.
    pub fn cup(&self, a: [u64; 2], b: [u64; 2]) -> u64 {
        let m = self.modulus();
        submod(mulmod(a[0], b[1], m), mulmod(a[1], b[0], m), m)
    }

    pub fn apply(&self, v: [u64; 2]) -> [u64; 2] {
        let m = self.modulus();
        let f = &self.frob;
        [
            (mulmod(f[0][0], v[0], m) + mulmod(f[0][1], v[1], m)) % m,
            (mulmod(f[1][0], v[0], m) + mulmod(f[1][1], v[1], m)) % m,
        ]
    }

    /// `F^k omega`.
    pub fn frob_pow_omega(&self, k: usize) -> [u64; 2] {
        let mut v = [1, 0];
        for _ in 0..k {
            v = self.apply(v);
        }
        v
    }

    /// Unit root of `X^2 - a_p X + p` modulo `p^precision`, by Newton iteration.
    pub fn unit_root(&self) -> Result<u64> {
        let m = self.modulus();
        let ap = self.residue(self.ap);
        if ap.is_multiple_of(self.p) {
            return Err(Error::NotOrdinary);
        }
        let mut u = ap;
        for _ in 0..=self.precision.ilog2() + 2 {
            let f = (submod(mulmod(u, u, m), mulmod(ap, u, m), m) + self.p) % m;
            let df = submod((2 * (u as u128) % m as u128) as u64, ap, m);
            let inv = crate::util::invmod(df, m).ok_or(Error::NotUnit)?;
            u = submod(u, mulmod(f, inv, m), m);
        }
        Ok(u)
    }
}

// ---- polynomials over Q_p (low degree first) ----

type Poly = Vec<Padic>;

fn trim(q: &Qp, mut a: Poly) -> Poly {
    let _ = q;
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn padd(q: &Qp, a: &[Padic], b: &[Padic], prec: i64) -> Poly {
    let n = a.len().max(b.len());
    let z = q.zero(prec);
    (0..n).map(|i| q.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z))).collect()
}

fn pmul(q: &Qp, a: &[Padic], b: &[Padic], prec: i64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![q.zero(prec); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                r[i + j] = q.add(&r[i + j], &q.mul(x, y));
            }
        }
    }
    r
}

/// Quotient and remainder by the monic integer polynomial `m`.
fn pdivrem_monic(q: &Qp, a: &[Padic], m: &[BigInt], prec: i64) -> (Poly, Poly) {
    let dm = m.len() - 1;
    let mut r: Poly = a.to_vec();
    if r.len() <= dm {
        return (Vec::new(), r);
    }
    let mut quo = vec![q.zero(prec); r.len() - dm];
    for k in (dm..r.len()).rev() {
        let c = r[k].clone();
        if c.is_zero() {
            continue;
        }
        quo[k - dm] = c.clone();
        for (j, mj) in m.iter().enumerate().take(dm) {
            if !mj.is_zero() {
                r[k - dm + j] = q.sub(&r[k - dm + j], &q.mul_int(&c, mj));
            }
        }
        r[k] = q.zero(prec);
    }
    r.truncate(dm);
    (quo, r)
}

fn big_poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

fn rat_trim(mut a: Vec<BigRational>) -> Vec<BigRational> {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn rat_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let b = rat_trim(b.to_vec());
    let mut r = rat_trim(a.to_vec());
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lb = b.last().expect("nonzero divisor").clone();
    let mut quo = vec![BigRational::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let k = r.len() - b.len();
        let c = r.last().unwrap() / &lb;
        for (j, bj) in b.iter().enumerate() {
            r[k + j] = &r[k + j] - &c * bj;
        }
        quo[k] = c;
        r.pop();
        r = rat_trim(r);
    }
    (quo, r)
}

fn rat_sub_mul(a: &[BigRational], q: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(q.len() + b.len());
    let mut r = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        r[i] += x;
    }
    for (i, x) in q.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] -= x * y;
        }
    }
    rat_trim(r)
}

/// `S` with `R Q + S Q' = 1` over `Q`.
fn bezout_s(qpoly: &[BigRational], dq: &[BigRational]) -> Result<Vec<BigRational>> {
    // Extended Euclid tracking only the cofactor of the second argument.
    let (mut r0, mut r1) = (qpoly.to_vec(), dq.to_vec());
    let (mut s0, mut s1) = (Vec::<BigRational>::new(), vec![BigRational::one()]);
    while !rat_trim(r1.clone()).is_empty() {
        let (quo, rem) = rat_divrem(&r0, &r1);
        let s2 = rat_sub_mul(&s0, &quo, &s1);
        r0 = r1;
        r1 = rem;
        s0 = s1;
        s1 = s2;
    }
    let g = rat_trim(r0);
    if g.len() != 1 {
        return Err(Error::BadReduction);
    }
    Ok(s0.iter().map(|c| c / &g[0]).collect())
}

fn rat_to_padic(q: &Qp, x: &BigRational, prec: i64) -> Result<Padic> {
    let n = q.from_bigint(x.numer(), prec + 8);
    q.div_int(&n, x.denom()).map(|v| q.cap(&v, prec))
}

fn ilog(p: u64, n: u64) -> i64 {
    if n == 0 {
        0
    } else {
        n.ilog(p) as i64
    }
}

/// Lower bound on the valuation of the dropped tail when the first `n` terms are kept.
fn tail_bound(p: u64, n: usize) -> i64 {
    let s = (p * (2 * n as u64 + 1) - 1) / 2;
    let deg = 2 * p + 3 * p * n as u64;
    n as i64 + 1 - ilog(p, 2 * s + 1) - ilog(p, 2 * deg + 3) - 1
}

/// Frobenius matrix on `H^1_dR` of `y^2 = x^3 + a4 x + a6`, certified to `p^k`.
pub fn kedlaya_frobenius(p: u64, a4: i64, a6: i64, k: u32) -> Result<DeRhamData> {
    check_curve(p, a4, a6)?;
    let ap = count_points_ap(p, a4, a6)?;
    if ap.rem_euclid(p as i64) == 0 {
        return Err(Error::NotOrdinary);
    }
    checked_pow(p, k).filter(|&m| m < 1 << 62).ok_or(Error::PrecisionOverflow { p, k })?;
    let target = k as i64 + 1;
    let mut n = 1usize;
    while tail_bound(p, n) < target {
        n += 1;
    }
    let s_max = (p * (2 * n as u64 - 1) - 1) / 2;
    // Tracked loss from the divisions by 2s - 1 and by 2j + 3.
    let mut slack: i64 = 8;
    for s in 1..=s_max {
        slack += crate::util::vp_u64(2 * s - 1, p) as i64;
    }
    for j in 0..=(3 * p * n as u64 + 2 * p) {
        slack += crate::util::vp_u64(2 * j + 3, p) as i64;
    }
    let w = target + slack;
    let q = Qp::new(p, (2 * w + 16) as usize);

    let qpoly: Vec<BigInt> = vec![BigInt::from(a6), BigInt::from(a4), BigInt::zero(), BigInt::one()];
    let dqr: Vec<BigRational> =
        vec![BigRational::from_integer(a4.into()), BigRational::zero(), BigRational::from_integer(3.into())];
    let qr: Vec<BigRational> = qpoly.iter().map(|c| BigRational::from_integer(c.clone())).collect();
    let s_poly: Poly = bezout_s(&qr, &dqr)?.iter().map(|c| rat_to_padic(&q, c, w)).collect::<Result<_>>()?;
    let dq: Poly = vec![q.from_int(a4, w), q.zero(w), q.from_int(3, w)];

    // E = Q(x^p) - Q(x)^p.
    let mut qp_pow = vec![BigInt::one()];
    for _ in 0..p {
        qp_pow = big_poly_mul(&qp_pow, &qpoly);
    }
    let mut e = vec![BigInt::zero(); 3 * p as usize + 1];
    e[0] += BigInt::from(a6);
    e[p as usize] += BigInt::from(a4);
    e[3 * p as usize] += BigInt::one();
    for (i, c) in qp_pow.iter().enumerate() {
        e[i] -= c;
    }

    let mut cols = [[q.zero(w), q.zero(w)], [q.zero(w), q.zero(w)]];
    for (i, col) in cols.iter_mut().enumerate() {
        // B[s]: coefficient of y^(-2s) dx/y.
        let mut b: Vec<Poly> = vec![Vec::new(); s_max as usize + 1];
        let mut ek = vec![BigInt::one()];
        let mut binom = BigRational::one();
        for kk in 0..n {
            let shift = (p as usize) * (i + 1) - 1;
            let s = ((p * (2 * kk as u64 + 1) - 1) / 2) as usize;
            let c = BigRational::from_integer(BigInt::from(p)) * &binom;
            let cp = rat_to_padic(&q, &c, w)?;
            let mut term = vec![q.zero(w); shift + ek.len()];
            for (j, x) in ek.iter().enumerate() {
                term[shift + j] = q.mul(&cp, &q.from_bigint(x, w));
            }
            b[s] = padd(&q, &b[s], &term, w);
            ek = big_poly_mul(&ek, &e);
            // binom(-1/2, k+1) = binom(-1/2, k) * (-1/2 - k) / (k + 1)
            binom *= BigRational::new(BigInt::from(-(2 * kk as i64 + 1)), BigInt::from(2 * (kk as i64 + 1)));
        }
        for s in (1..=s_max as usize).rev() {
            let a = trim(&q, std::mem::take(&mut b[s]));
            if a.is_empty() {
                continue;
            }
            let (_, r) = pdivrem_monic(&q, &a, &qpoly, w);
            let (_, v) = pdivrem_monic(&q, &pmul(&q, &r, &s_poly, w), &qpoly, w);
            let vdq = pmul(&q, &v, &dq, w);
            let diff: Poly = padd(&q, &a, &vdq.iter().map(|x| q.neg(x)).collect::<Vec<_>>(), w);
            let (u, _) = pdivrem_monic(&q, &diff, &qpoly, w);
            let den = BigInt::from(2 * s as i64 - 1);
            let mut dv = Vec::with_capacity(v.len().saturating_sub(1));
            for (j, x) in v.iter().enumerate().skip(1) {
                dv.push(q.div_int(&q.mul_int(x, &BigInt::from(2 * j as i64)), &den)?);
            }
            let next = padd(&q, &u, &dv, w);
            b[s - 1] = padd(&q, &b[s - 1], &next, w);
        }
        let mut a0 = trim(&q, std::mem::take(&mut b[0]));
        // x^(j+2) = -((2j+1) a4 x^j + 2j a6 x^(j-1)) / (2j+3) modulo exact forms.
        for m in (2..a0.len()).rev() {
            let c = a0[m].clone();
            if c.is_zero() {
                continue;
            }
            let j = m - 2;
            let den = BigInt::from(2 * j as i64 + 3);
            let t1 = q.div_int(&q.mul_int(&c, &BigInt::from((2 * j as i64 + 1) * a4)), &den)?;
            a0[j] = q.sub(&a0[j], &t1);
            if j >= 1 {
                let t2 = q.div_int(&q.mul_int(&c, &BigInt::from(2 * j as i64 * a6)), &den)?;
                a0[j - 1] = q.sub(&a0[j - 1], &t2);
            }
            a0[m] = q.zero(w);
        }
        col[0] = a0.first().cloned().unwrap_or_else(|| q.zero(w));
        col[1] = a0.get(1).cloned().unwrap_or_else(|| q.zero(w));
    }
    let tracked = cols.iter().flatten().map(|x| x.prec).min().unwrap_or(0);
    let certified = tracked.min(tail_bound(p, n));
    if certified < k as i64 {
        return Err(Error::PrecisionBudgetExceeded(format!("certified p^{certified}, requested p^{k}")));
    }
    let mut frob = [[0u64; 2]; 2];
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            frob[r][c] = q.residue(x, k as i64)?.to_u64().expect("below p^k");
        }
    }
    Ok(DeRhamData { p, a4, a6, precision: k, frob, ap, pairing: [[0, 1], [-1, 0]], terms: n })
}

/// Crystalline values indexed by word length: `f_k = (1/p) <F^k omega, omega>`
/// and `f_{k,l} = (1/p) <F^k omega, F^l omega>`.
#[derive(Clone, Debug)]
pub struct CrystallineClasses {
    pub f: Vec<KElem>,
    pub pair: Vec<Vec<KElem>>,
}

fn over_p(t: &Tower, drd: &DeRhamData, r: u64) -> KElem {
    t.k_normalize(KElem { num: t.truncate(&t.from_residue(r), drd.precision), den: 1 })
}

/// The classes for word lengths `0..=r` in the unramified tower over `Z_p`.
pub fn crystalline_values(t: &Tower, drd: &DeRhamData, r: usize) -> Result<CrystallineClasses> {
    crystalline_values_for_form(t, drd, r, [1, 0])
}

/// The same classes computed against the form with coordinates `omega` in the
/// basis `{dx/y, x dx/y}`, e.g. `[lambda, 0]` for a rescaled differential.
pub fn crystalline_values_for_form(
    t: &Tower,
    drd: &DeRhamData,
    r: usize,
    omega: [u64; 2],
) -> Result<CrystallineClasses> {
    if t.p() != drd.p || t.e() != 1 {
        return Err(Error::Invalid("crystalline classes are computed over Z_p (pi = p)".into()));
    }
    if t.precision() < drd.precision {
        return Err(Error::Invalid("tower precision is below the certified precision".into()));
    }
    let pw: Vec<[u64; 2]> = (0..=r)
        .scan(omega, |v, _| {
            let cur = *v;
            *v = drd.apply(cur);
            Some(cur)
        })
        .collect();
    let f = pw.iter().map(|v| over_p(t, drd, drd.cup(*v, omega))).collect();
    let pair = (0..=r).map(|a| (0..=r).map(|b| over_p(t, drd, drd.cup(pw[a], pw[b]))).collect()).collect();
    Ok(CrystallineClasses { f, pair })
}

/// Table of `f~_mu = f_mu` (here `N(p) = -1`) and `f_{mu,nu}` for all words
/// of length `1..=r` over `n` letters; every direction acts trivially on `Z_p`.
pub fn crystalline_classes(t: &Tower, drd: &DeRhamData, n: usize, r: usize) -> Result<FTable> {
    let cv = crystalline_values(t, drd, r)?;
    let scale = t.n_of_pi() + 1;
    let mut table = FTable::default();
    let words: Vec<Word> = nonempty_words_up_to(n, r);
    for mu in &words {
        table.tilde.insert(mu.clone(), t.k_mul_p_pow(&cv.f[mu.len()], scale));
    }
    for mu in &words {
        for nu in &words {
            if mu != nu {
                table.pair.insert((mu.clone(), nu.clone()), cv.pair[mu.len()][nu.len()].clone());
            }
        }
    }
    Ok(table)
}

/// Signed representative of a residue, for reports.
pub fn balanced(x: u64, m: u64) -> i128 {
    let x = x as i128;
    let m = m as i128;
    if x > m / 2 {
        x - m
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_and_det_small() {
        let d = kedlaya_frobenius(7, 1, 3, 6).unwrap();
        assert!(d.trace_matches_ap(), "{d:?}");
        assert!(d.det_is_p(), "{d:?}");
    }
}
