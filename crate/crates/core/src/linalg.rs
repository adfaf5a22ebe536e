//! p-adic linear algebra: determinants over `K_pi` and rank by valuation pivoting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tower::{KElem, Tower, Valuation};
use crate::util::{invmod, mulmod, submod, vp_residue};

/// A matrix over `K_pi` with an explicit working precision.
#[derive(Clone, Debug)]
pub struct PMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<KElem>,
    /// Minors with valuation at least this are treated as vanishing.
    pub precision: u32,
}

impl PMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<KElem>, precision: u32) -> Result<PMatrix> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        Ok(PMatrix { rows, cols, entries, precision })
    }

    pub fn get(&self, i: usize, j: usize) -> &KElem {
        &self.entries[i * self.cols + j]
    }

    /// Determinant of the submatrix on the given rows and columns.
    ///
    /// Laplace expansion along the last row with memoisation over column
    /// subsets, so only ring operations are used and no precision is lost to
    /// division.
    pub fn minor(&self, t: &Tower, rows: &[usize], cols: &[usize]) -> Result<KElem> {
        let k = rows.len();
        if k != cols.len() || k > 20 {
            return Err(Error::Dimension("minor must be square and small".into()));
        }
        let full = (1usize << k) - 1;
        let mut dp: Vec<Option<KElem>> = vec![None; 1 << k];
        dp[0] = Some(t.k_int(1));
        for mask in 1..=full {
            let c = mask.count_ones() as usize;
            let row = rows[c - 1];
            let mut acc = t.k_zero();
            let mut pos = 0;
            for (j, &col) in cols.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let sub = dp[mask & !(1 << j)].as_ref().expect("filled in increasing order");
                let a = self.get(row, col);
                if !t.k_is_zero(a) && !t.k_is_zero(sub) {
                    let term = t.k_mul(a, sub);
                    // Sign of the cofactor: row c-1, column position `pos` in the subset.
                    if (c - 1 + pos).is_multiple_of(2) {
                        acc = t.k_add(&acc, &term);
                    } else {
                        acc = t.k_sub(&acc, &term);
                    }
                }
                pos += 1;
            }
            dp[mask] = Some(acc);
        }
        Ok(dp[full].take().expect("full mask"))
    }

    /// All `k x k` minors with their valuations.
    pub fn rank_minors(&self, t: &Tower, k: usize) -> Result<MinorReport> {
        if k == 0 || k > self.rows.min(self.cols) {
            return Err(Error::Dimension(format!("minor size {k} out of range")));
        }
        let mut minors = Vec::new();
        for rs in subsets(self.rows, k) {
            for cs in subsets(self.cols, k) {
                let d = self.minor(t, &rs, &cs)?;
                let v = t.k_valuation(&d);
                let vanishing = match v {
                    Valuation::Infinite => true,
                    Valuation::Finite(x) => x >= num_rational::Ratio::from_integer(self.precision as i64),
                };
                minors.push(MinorInfo {
                    rows: rs.iter().map(|r| r + 1).collect(),
                    cols: cs.iter().map(|c| c + 1).collect(),
                    valuation: v,
                    vanishing,
                });
            }
        }
        let any = minors.iter().any(|m| !m.vanishing);
        Ok(MinorReport { size: k, rank_at_least_size: any, minors })
    }
}

/// One entry of a [`MinorReport`]. Row and column indices are 1-based.
#[derive(Clone, Debug, Serialize)]
pub struct MinorInfo {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub valuation: Valuation,
    pub vanishing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinorReport {
    pub size: usize,
    /// True when some minor is certified nonzero, so the rank is at least `size`.
    pub rank_at_least_size: bool,
    pub minors: Vec<MinorInfo>,
}

/// All increasing `k`-subsets of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Outcome of p-adic row reduction of a `Z_p` matrix known modulo `p^prec`.
#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub nullity: usize,
    /// Valuations of the pivots in the order they were chosen.
    pub pivot_valuations: Vec<u32>,
    /// The remaining block vanishes modulo `p^precision`.
    pub precision: u32,
}

/// Rank of an integer matrix modulo `p^prec` over `Q_p`.
///
/// Pivots are chosen with minimal valuation, so elimination is exact modulo
/// `p^prec`. The reported rank is certified from below; the nullity counts
/// directions on which the map vanishes modulo `p^prec`.
pub fn padic_rank(mut a: Vec<Vec<u64>>, p: u64, prec: u32) -> Result<RankReport> {
    let m = p.checked_pow(prec).ok_or(Error::PrecisionOverflow { p, k: prec })?;
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    for r in a.iter_mut() {
        for x in r.iter_mut() {
            *x %= m;
        }
    }
    let mut used_r = vec![false; rows];
    let mut used_c = vec![false; cols];
    let mut pivots = Vec::new();
    loop {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            for j in (0..cols).filter(|&j| !used_c[j]) {
                if a[i][j] != 0 {
                    let v = vp_residue(a[i][j], p, prec);
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        used_r[pi] = true;
        used_c[pj] = true;
        pivots.push(v);
        let pv = p.pow(v);
        let u = a[pi][pj] / pv;
        let uinv = invmod(u % m, m).ok_or(Error::NotUnit)?;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            if a[i][pj] == 0 {
                continue;
            }
            let q = mulmod(a[i][pj] / pv, uinv, m);
            for j in 0..cols {
                let t = mulmod(q, a[pi][j], m);
                a[i][j] = submod(a[i][j], t, m);
            }
        }
    }
    Ok(RankReport { rank: pivots.len(), nullity: cols - pivots.len(), pivot_valuations: pivots, precision: prec })
}

/// Row reduction that also records which combinations of the input rows
/// vanish modulo `p^prec`.
///
/// Returns the rank report and one integer vector per non-pivot row: the
/// coefficients `u` with `sum_i u_i a_i = 0 mod p^prec`.
pub fn padic_left_kernel(mut a: Vec<Vec<u64>>, p: u64, prec: u32) -> Result<(RankReport, Vec<Vec<u64>>)> {
    let m = p.checked_pow(prec).ok_or(Error::PrecisionOverflow { p, k: prec })?;
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    for r in a.iter_mut() {
        for x in r.iter_mut() {
            *x %= m;
        }
    }
    let mut u: Vec<Vec<u64>> = (0..rows).map(|i| (0..rows).map(|j| u64::from(i == j)).collect()).collect();
    let mut used_r = vec![false; rows];
    let mut used_c = vec![false; cols];
    let mut pivots = Vec::new();
    loop {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            for j in (0..cols).filter(|&j| !used_c[j]) {
                if a[i][j] != 0 {
                    let v = vp_residue(a[i][j], p, prec);
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        used_r[pi] = true;
        used_c[pj] = true;
        pivots.push(v);
        let pv = p.pow(v);
        let uinv = invmod((a[pi][pj] / pv) % m, m).ok_or(Error::NotUnit)?;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            if a[i][pj] == 0 {
                continue;
            }
            // Every entry of an unused row has valuation >= v, so the
            // quotient is exact and the pivot column is cleared.
            let q = mulmod(a[i][pj] / pv, uinv, m);
            for j in 0..cols {
                let t = mulmod(q, a[pi][j], m);
                a[i][j] = submod(a[i][j], t, m);
            }
            for j in 0..rows {
                let t = mulmod(q, u[pi][j], m);
                u[i][j] = submod(u[i][j], t, m);
            }
        }
    }
    let kernel = (0..rows).filter(|&i| !used_r[i]).map(|i| u[i].clone()).collect();
    let report =
        RankReport { rank: pivots.len(), nullity: cols - pivots.len(), pivot_valuations: pivots, precision: prec };
    Ok((report, kernel))
}

/// Rank over `K_pi` of a matrix with entries in `K_pi`.
///
/// Pivots are chosen with minimal valuation and rows are cleared by exact
/// division in `K_pi`. Returns a lower bound certified at the entries' precision.
pub fn tower_rank(t: &Tower, mut a: Vec<Vec<KElem>>) -> Result<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut used_r = vec![false; rows];
    let mut used_c = vec![false; cols];
    let mut rank = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            for j in (0..cols).filter(|&j| !used_c[j]) {
                let v = t.k_valuation(&a[i][j]);
                if v.is_finite() && a[i][j].abs_precision() > 0 {
                    let x = v.to_f64();
                    if best.is_none_or(|(bv, _, _)| x < bv) {
                        best = Some((x, i, j));
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        used_r[pi] = true;
        used_c[pj] = true;
        rank += 1;
        let inv = t.k_inv(&a[pi][pj])?;
        for i in (0..rows).filter(|&i| !used_r[i]) {
            if t.k_is_zero(&a[i][pj]) {
                continue;
            }
            let q = t.k_mul(&a[i][pj], &inv);
            for j in 0..cols {
                let s = t.k_mul(&q, &a[pi][j]);
                a[i][j] = t.k_sub(&a[i][j], &s);
            }
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_small_matrices() {
        let r = padic_rank(vec![vec![1, 2], vec![2, 4]], 5, 6).unwrap();
        assert_eq!(r.rank, 1);
        let r = padic_rank(vec![vec![5, 0], vec![0, 25]], 5, 6).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.pivot_valuations, vec![1, 2]);
    }

    #[test]
    fn determinant_of_identity() {
        let t = Tower::new(5, 2, 1, 1, 8).unwrap();
        let n = 5;
        let entries = (0..n * n).map(|k| t.k_int(if k % (n + 1) == 0 { 1 } else { 0 })).collect();
        let m = PMatrix::new(n, n, entries, 8).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let d = m.minor(&t, &all, &all).unwrap();
        assert!(t.k_is_zero(&t.k_sub(&d, &t.k_int(1))));
        assert!(m.rank_minors(&t, 5).unwrap().rank_at_least_size);
    }
}
