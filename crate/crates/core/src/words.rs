//! Words in the free monoid on `n` letters, and weights `sum m_mu phi_mu`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tower::{FrobeniusFamily, TowerElement};

/// A word `i1 i2 ... is` with letters in `1..=n`.
///
/// Words are ordered by length, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Word {
        Word(letters)
    }

    pub fn letter(i: u8) -> Word {
        Word(vec![i])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self * other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `i * self`.
    pub fn prepend(&self, i: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(i);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// Prefix of length `k`.
    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k].to_vec())
    }

    /// Exchange the letters 1 and 2.
    pub fn swap12(&self) -> Word {
        Word(
            self.0
                .iter()
                .map(|&l| match l {
                    1 => 2,
                    2 => 1,
                    x => x,
                })
                .collect(),
        )
    }

    /// Check that all letters lie in `1..=n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        for &l in &self.0 {
            if l == 0 || l as usize > n {
                return Err(Error::BadLetter { letter: l, n });
            }
        }
        Ok(())
    }

    /// Position in the canonical order of `M_n^r` for any `r >= len`:
    /// `D(n, len - 1)` shorter words come first, then the lexicographic rank.
    pub fn canonical_index(&self, n: usize) -> Result<usize> {
        self.validate(n)?;
        if self.0.is_empty() {
            return Ok(0);
        }
        let rank = self.0.iter().fold(0usize, |acc, &l| acc * n + (l as usize - 1));
        Ok(d_count(n, self.0.len() - 1) + rank)
    }

    /// Parse a digit string such as `"12"`. The empty string is the empty word.
    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "e" || s == "()" {
            return Ok(Word::empty());
        }
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .filter(|&d| d > 0)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Parse(format!("bad letter {c:?} in word {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()
            .map(Word)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// All words of length exactly `s` over `n` letters, in canonical order.
pub fn words_of_length(n: usize, s: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..s {
        let mut next = Vec::with_capacity(out.len() * n);
        for w in &out {
            for i in 1..=n as u8 {
                let mut v = w.0.clone();
                v.push(i);
                next.push(Word(v));
            }
        }
        out = next;
    }
    out
}

/// `M_n^r`: all words of length at most `r`, in canonical order.
pub fn words_up_to(n: usize, r: usize) -> Vec<Word> {
    (0..=r).flat_map(|s| words_of_length(n, s)).collect()
}

/// `M_n^{r,+}`: nonempty words of length at most `r`.
pub fn nonempty_words_up_to(n: usize, r: usize) -> Vec<Word> {
    (1..=r).flat_map(|s| words_of_length(n, s)).collect()
}

/// `D(n, r) = 1 + n + ... + n^r = |M_n^r|`.
pub fn d_count(n: usize, r: usize) -> usize {
    (0..=r).map(|s| n.pow(s as u32)).sum()
}

/// A weight `w = sum m_mu phi_mu` with integer multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Weight(pub BTreeMap<Word, i64>);

impl Weight {
    pub fn zero() -> Weight {
        Weight(BTreeMap::new())
    }

    pub fn monomial(w: Word, m: i64) -> Weight {
        let mut t = BTreeMap::new();
        if m != 0 {
            t.insert(w, m);
        }
        Weight(t)
    }

    fn add_term(&mut self, w: Word, m: i64) {
        let v = self.0.get(&w).copied().unwrap_or(0) + m;
        if v == 0 {
            self.0.remove(&w);
        } else {
            self.0.insert(w, v);
        }
    }

    pub fn add(&self, other: &Weight) -> Weight {
        let mut r = self.clone();
        for (w, &m) in &other.0 {
            r.add_term(w.clone(), m);
        }
        r
    }

    /// Product in the monoid ring: `phi_mu * phi_nu = phi_{mu nu}`.
    pub fn mul(&self, other: &Weight) -> Weight {
        let mut r = Weight::zero();
        for (a, &x) in &self.0 {
            for (b, &y) in &other.0 {
                r.add_term(a.concat(b), x * y);
            }
        }
        r
    }

    /// Total degree `sum m_mu`.
    pub fn degree(&self) -> i64 {
        self.0.values().sum()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.0.iter().map(|(w, m)| if w.is_empty() { format!("{m}") } else { format!("{m}*phi{w}") }).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `w(mu) = 1 + phi_{i1} + phi_{i1 i2} + ... + phi_{i1...i(r-1)}`, the weight
/// with `phi_mu(a) = pi^{w(mu)} delta_mu(a) +` lower order terms.
pub fn cocycle_weight(mu: &Word) -> Result<Weight> {
    if mu.is_empty() {
        return Err(Error::EmptyWord);
    }
    let mut w = Weight::zero();
    for k in 0..mu.len() {
        w.add_term(mu.prefix(k), 1);
    }
    Ok(w)
}

/// `lambda^w = prod phi_mu(lambda)^(m_mu)`.
///
/// Negative multiplicities need `lambda` to be a unit; non-negative weights
/// are accepted for any `lambda` (this is how `pi^{w(mu)}` is formed).
pub fn lambda_pow(fam: &FrobeniusFamily, lambda: &TowerElement, w: &Weight) -> Result<TowerElement> {
    let t = &fam.tower;
    if w.0.values().any(|&m| m < 0) && !t.is_unit(lambda) {
        return Err(Error::NotUnit);
    }
    let mut acc = t.truncate(&t.one(), lambda.precision());
    for (mu, &m) in &w.0 {
        mu.validate(fam.n())?;
        let base = fam.phi_word(mu, lambda)?;
        let b = if m < 0 { t.inv(&base)? } else { base };
        acc = t.mul(&acc, &t.pow(&b, m.unsigned_abs()));
    }
    Ok(acc)
}
