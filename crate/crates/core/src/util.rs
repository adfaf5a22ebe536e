//! Small integer helpers used across the crate.

/// `a * b mod m` without overflow.
#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn submod(a: u64, b: u64, m: u64) -> u64 {
    let (a, b) = (a % m, b % m);
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

/// `b^e mod m`.
pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic primality test, adequate for the small primes used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors of `n`.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// p-adic valuation of a positive integer.
pub fn vp_u64(mut n: u64, p: u64) -> u32 {
    debug_assert!(n > 0);
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

/// p-adic valuation of a residue `a mod p^k`; returns `k` for zero.
pub fn vp_residue(a: u64, p: u64, k: u32) -> u32 {
    if a == 0 {
        return k;
    }
    vp_u64(a, p).min(k)
}

/// Checked integer power.
pub fn checked_pow(b: u64, e: u32) -> Option<u64> {
    let mut r: u64 = 1;
    for _ in 0..e {
        r = r.checked_mul(b)?;
    }
    Some(r)
}

/// Modular inverse of `a` modulo `m` (gcd must be 1).
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submod_wraps() {
        assert_eq!(submod(3, 5, 7), 5);
        assert_eq!(submod(5, 3, 7), 2);
        assert_eq!(submod(0, 0, 7), 0);
    }

    #[test]
    fn inverse_and_valuation() {
        assert_eq!(mulmod(invmod(3, 49).unwrap(), 3, 49), 1);
        assert_eq!(vp_u64(98, 7), 2);
        assert_eq!(prime_factors(48), vec![2, 3]);
    }
}
