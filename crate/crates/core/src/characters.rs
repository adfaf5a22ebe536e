//! delta-characters in use: the `G_m` character, ASD congruences, the
//! pairing `<alpha, beta>_{mu,nu}` with its kernel, and Strassman counting.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formal::LogSeries;
use crate::linalg::padic_left_kernel;
use crate::serre_tate::{check_beta, st_f_tilde, st_f_values};
use crate::symbol::{sym_eval, Symbol};
use crate::tower::{FrobeniusFamily, KElem, Tower, TowerElement, Valuation};
use crate::util::{addmod, mulmod, submod, vp_residue};
use crate::words::Word;

// ---- G_m ----

/// `log(1 + u)` for `u` in the maximal ideal, summed until the tail drops
/// below the working precision.
pub fn log_one_plus(t: &Tower, u: &TowerElement) -> Result<KElem> {
    let Some(j) = t.val_pi(u) else {
        return Ok(t.k_from(u));
    };
    if j == 0 {
        return Err(Error::LogDivergence);
    }
    let v = Ratio::new(j as i64, t.e() as i64);
    let target = Ratio::from_integer(t.precision() as i64 + 1);
    let p = t.p();
    let mut acc = t.k_zero();
    let mut pow = t.one();
    let mut n: u64 = 1;
    loop {
        pow = t.mul(&pow, u);
        let term = t.k_mul(&t.k_from(&pow), &t.k_rational(1, n as i64)?);
        acc = if n % 2 == 1 { t.k_add(&acc, &term) } else { t.k_sub(&acc, &term) };
        n += 1;
        // n v - log_p(n) is increasing once n v > 2, so the first n past the
        // target bounds the whole tail.
        let lg = n.ilog(p) as i64;
        let bound = v * Ratio::from_integer(n as i64) - Ratio::from_integer(lg);
        if bound >= target && v * Ratio::from_integer(n as i64) > Ratio::from_integer(2) {
            break;
        }
    }
    Ok(acc)
}

/// `log x` for a principal unit `x = 1 mod pi`.
pub fn log_principal_unit(t: &Tower, x: &TowerElement) -> Result<KElem> {
    log_one_plus(t, &t.sub(x, &t.one()))
}

/// `psi_i(x) = p^{N(pi)} log(phi_i(x) / x^p)` for a unit `x`.
///
/// `phi_i(x) / x^p = 1 + pi delta_i(x) / x^p`, computed without the loss of
/// one digit that an explicit `delta_i` would cost.
pub fn gm_character_eval(fam: &FrobeniusFamily, i: u8, x: &TowerElement) -> Result<KElem> {
    let t = fam.tower.as_ref();
    if !t.is_unit(x) {
        return Err(Error::NotUnit);
    }
    let xp_inv = t.inv(&t.pow(x, t.p()))?;
    let ratio = t.mul(&fam.phi(i, x)?, &xp_inv);
    let l = log_one_plus(t, &t.sub(&ratio, &t.one()))?;
    Ok(t.k_mul_p_pow(&l, t.n_of_pi()))
}

/// [`gm_character_eval`] over a batch of points, in parallel.
pub fn gm_character_batch(fam: &FrobeniusFamily, i: u8, xs: &[TowerElement]) -> Vec<Result<KElem>> {
    xs.par_iter().map(|x| gm_character_eval(fam, i, x)).collect()
}

/// The symbol `p^{N(pi)+1}(phi_i - p)` of `psi_i`.
pub fn gm_symbol(fam: &FrobeniusFamily, i: u8) -> Symbol {
    let t = &fam.tower;
    let s = t.k_mul_p_pow(&t.k_int(1), t.n_of_pi() + 1);
    Symbol::term(Word::letter(i), s.clone()).add(fam, &Symbol::term(Word::empty(), t.k_neg(&t.k_mul_p_pow(&s, 1))))
}

// ---- ASD congruences ----

/// The three class values entering a congruence for `(mu, nu)`.
#[derive(Clone, Debug)]
pub struct AsdValues {
    pub ftilde_mu: KElem,
    pub ftilde_nu: KElem,
    pub f_mu_nu: KElem,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsdLine {
    pub n: usize,
    pub valuation: Valuation,
    /// The expression is known modulo `p^certificate`.
    pub certificate: i64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsdReport {
    pub mu: String,
    pub nu: String,
    pub nmax: usize,
    pub lines: Vec<AsdLine>,
    pub all_pass: bool,
}

/// Checks
/// `f~_nu phi_mu(b_N)/N - f~_mu phi_nu(b_{p^{r-s}N})/(p^{r-s}N) + f_{mu,nu} b_{p^r N}/(p^r N)`
/// lies in `p R_pi` for `1 <= N <= nmax`.
///
/// A line passes only if the valuation is at least 1 and the value is known
/// modulo `p^2` or better.
pub fn asd_check(
    fam: &FrobeniusFamily,
    log: &LogSeries,
    vals: &AsdValues,
    mu: &Word,
    nu: &Word,
    nmax: usize,
) -> Result<AsdReport> {
    let t = fam.tower.as_ref();
    if mu == nu {
        return Err(Error::DistinctWordsRequired);
    }
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyWord);
    }
    let (r, s) = (mu.len() as u32, nu.len() as u32);
    if r < s {
        return Err(Error::Invalid(format!("need |mu| >= |nu|, got {r} < {s}")));
    }
    let p = t.p() as usize;
    let need = p.pow(r) * nmax;
    if log.len() < need {
        return Err(Error::SeriesTooShort { need, have: log.len() });
    }
    let lines = (1..=nmax)
        .into_par_iter()
        .map(|n| {
            let a = t.k_mul(&vals.ftilde_nu, &fam.phi_word_k(mu, &log.coeff(t, n)?)?);
            let b = t.k_mul(&vals.ftilde_mu, &fam.phi_word_k(nu, &log.coeff(t, p.pow(r - s) * n)?)?);
            let c = t.k_mul(&vals.f_mu_nu, &log.coeff(t, p.pow(r) * n)?);
            let x = t.k_add(&t.k_sub(&a, &b), &c);
            let valuation = t.k_valuation(&x);
            let certificate = x.abs_precision();
            let pass = certificate >= 2 && valuation.at_least(Ratio::from_integer(1));
            Ok(AsdLine { n, valuation, certificate, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pass = lines.iter().all(|l| l.pass);
    Ok(AsdReport { mu: mu.to_string(), nu: nu.to_string(), nmax, lines, all_pass })
}

// ---- the pairing ----

/// Two distinct words of length 1 or 2 for the pairing `<., .>_{mu,nu}`.
#[derive(Clone, Debug)]
pub struct PairingContext {
    pub fam: FrobeniusFamily,
    pub mu: Word,
    pub nu: Word,
}

impl PairingContext {
    pub fn new(fam: FrobeniusFamily, mu: Word, nu: Word) -> Result<PairingContext> {
        mu.validate(fam.n())?;
        nu.validate(fam.n())?;
        if mu == nu {
            return Err(Error::DistinctWordsRequired);
        }
        for w in [&mu, &nu] {
            if !(1..=2).contains(&w.len()) {
                return Err(Error::Invalid(format!("word {w} must have length 1 or 2")));
            }
        }
        Ok(PairingContext { fam, mu, nu })
    }

    pub fn r(&self) -> u32 {
        self.mu.len() as u32
    }

    pub fn s(&self) -> u32 {
        self.nu.len() as u32
    }

    /// The context with `mu` and `nu` exchanged.
    pub fn swapped(&self) -> PairingContext {
        PairingContext { fam: self.fam.clone(), mu: self.nu.clone(), nu: self.mu.clone() }
    }
}

/// `<alpha, beta>_{mu,nu} = beta^{phi_nu} alpha^{phi_mu} - beta^{phi_mu} alpha^{phi_nu}
/// + p^s (alpha beta^{phi_mu} - beta alpha^{phi_mu}) + p^r (beta alpha^{phi_nu} - alpha beta^{phi_nu})`.
pub fn pairing(ctx: &PairingContext, alpha: &TowerElement, beta: &TowerElement) -> Result<TowerElement> {
    let t = ctx.fam.tower.as_ref();
    let am = ctx.fam.phi_word(&ctx.mu, alpha)?;
    let an = ctx.fam.phi_word(&ctx.nu, alpha)?;
    let bm = ctx.fam.phi_word(&ctx.mu, beta)?;
    let bn = ctx.fam.phi_word(&ctx.nu, beta)?;
    let ps = t.from_int((t.p() as i64).pow(ctx.s()));
    let pr = t.from_int((t.p() as i64).pow(ctx.r()));
    let main = t.sub(&t.mul(&bn, &am), &t.mul(&bm, &an));
    let x = t.mul(&ps, &t.sub(&t.mul(alpha, &bm), &t.mul(beta, &am)));
    let y = t.mul(&pr, &t.sub(&t.mul(beta, &an), &t.mul(alpha, &bn)));
    Ok(t.add(&t.add(&main, &x), &y))
}

/// Basis `Y^i pi^j` of `K_pi` over `Q_p`, in coordinate order.
pub fn qp_basis(t: &Tower) -> Vec<TowerElement> {
    (0..t.dim())
        .map(|k| {
            let mut c = vec![0u64; t.dim()];
            c[k] = 1;
            t.from_coeffs(&c, t.precision()).expect("unit vector")
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub mu: String,
    pub nu: String,
    pub qp_dimension: usize,
    /// Dimension of `{alpha : <alpha, beta> = 0}` over `Q_p`.
    pub dimension: usize,
    pub pivot_valuations: Vec<u32>,
    /// The remaining block vanishes modulo `p^precision`.
    pub precision: u32,
    /// Kernel vectors as coordinate lists in the basis `Y^i pi^j`.
    pub witnesses: Vec<Vec<u64>>,
}

/// Kernel of the `Q_p`-linear map `alpha -> <alpha, beta>_{mu,nu}` on the
/// whole tower level.
///
/// Errors with `PrecisionExhausted` if some pivot uses more than half of the
/// working precision, since the zero block would then not be separated from
/// genuine small pivots.
pub fn kernel_dimension(ctx: &PairingContext, beta: &TowerElement) -> Result<KernelReport> {
    let t = ctx.fam.tower.as_ref();
    let basis = qp_basis(t);
    let rows =
        basis.par_iter().map(|a| pairing(ctx, a, beta).map(|x| x.coeffs().to_vec())).collect::<Result<Vec<_>>>()?;
    let prec = beta.precision().min(t.precision());
    let (rank, kernel) = padic_left_kernel(rows, t.p(), prec)?;
    if let Some(&v) = rank.pivot_valuations.iter().max() {
        if 2 * v >= prec {
            return Err(Error::PrecisionExhausted(format!("pivot of valuation {v} at precision {prec}")));
        }
    }
    Ok(KernelReport {
        mu: ctx.mu.to_string(),
        nu: ctx.nu.to_string(),
        qp_dimension: t.dim(),
        dimension: t.dim() - rank.rank,
        pivot_valuations: rank.pivot_valuations,
        precision: prec,
        witnesses: kernel,
    })
}

/// Whether the coordinate vectors `a` and `b` are proportional over `Q_p`
/// modulo `p^prec` (all 2x2 minors vanish).
pub fn proportional(a: &[u64], b: &[u64], p: u64, prec: u32) -> bool {
    let m = p.pow(prec);
    (0..a.len()).all(|i| (0..a.len()).all(|j| mulmod(a[i], b[j], m) == mulmod(a[j], b[i], m)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReciprocityReport {
    /// `theta(psi_{mu,nu,beta})(alpha)`.
    pub lhs: String,
    /// `theta(psi_{nu,mu,alpha})(beta)`.
    pub rhs: String,
    /// Both sides equal `p^{N+1} <alpha, beta>_{mu,nu}`.
    pub matches_pairing: bool,
    pub holds: bool,
}

/// Evaluates `theta(psi_{mu,nu})` with Serre-Tate values at `beta` on `alpha`,
/// and the exchanged character at `alpha` on `beta`, and compares them.
pub fn reciprocity_check(ctx: &PairingContext, alpha: &TowerElement, beta: &TowerElement) -> Result<ReciprocityReport> {
    let fam = &ctx.fam;
    let t = fam.tower.as_ref();
    let (a, b) = (t.k_from(alpha), t.k_from(beta));
    check_beta(t, &a)?;
    check_beta(t, &b)?;
    let side = |mu: &Word, nu: &Word, at: &KElem, on: &KElem| -> Result<KElem> {
        let ft_mu = st_f_tilde(fam, at, mu)?;
        let ft_nu = st_f_tilde(fam, at, nu)?;
        let f_mn = st_f_values(fam, at, mu, Some(nu))?;
        let theta = Symbol::term(mu.clone(), ft_nu)
            .add(fam, &Symbol::term(nu.clone(), t.k_neg(&ft_mu)))
            .add(fam, &Symbol::term(Word::empty(), f_mn));
        sym_eval(fam, &theta, on)
    };
    let lhs = side(&ctx.mu, &ctx.nu, &b, &a)?;
    let rhs = side(&ctx.nu, &ctx.mu, &a, &b)?;
    let direct = t.k_mul_p_pow(&t.k_from(&pairing(ctx, alpha, beta)?), t.n_of_pi() + 1);
    let holds = t.k_is_zero(&t.k_sub(&lhs, &rhs));
    let matches_pairing = t.k_is_zero(&t.k_sub(&lhs, &direct));
    Ok(ReciprocityReport { lhs: t.k_format(&lhs), rhs: t.k_format(&rhs), matches_pairing, holds })
}

// ---- Strassman ----

/// A series `sum a_n t^n` over `Z_p`: coefficients `a_0..a_M` known modulo
/// `p^precision`, and `v(a_n) >= tail_slope * n + tail_offset` for `n > M`.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictedSeries {
    pub p: u64,
    pub precision: u32,
    pub coeffs: Vec<u64>,
    pub tail_slope: f64,
    pub tail_offset: f64,
}

impl RestrictedSeries {
    /// A polynomial: the tail vanishes.
    pub fn polynomial(p: u64, precision: u32, coeffs: Vec<u64>) -> Result<RestrictedSeries> {
        RestrictedSeries::new(p, precision, coeffs, 0.0, f64::INFINITY)
    }

    pub fn new(
        p: u64,
        precision: u32,
        coeffs: Vec<u64>,
        tail_slope: f64,
        tail_offset: f64,
    ) -> Result<RestrictedSeries> {
        let m = p.checked_pow(precision).ok_or(Error::PrecisionOverflow { p, k: precision })?;
        if tail_slope < 0.0 || (tail_slope == 0.0 && tail_offset.is_finite()) {
            return Err(Error::Invalid("the tail bound must tend to infinity".into()));
        }
        Ok(RestrictedSeries {
            p,
            precision,
            coeffs: coeffs.into_iter().map(|c| c % m).collect(),
            tail_slope,
            tail_offset,
        })
    }

    /// From signed integer coefficients.
    pub fn from_ints(p: u64, precision: u32, coeffs: &[i64]) -> Result<RestrictedSeries> {
        let m = p.checked_pow(precision).ok_or(Error::PrecisionOverflow { p, k: precision })? as i64;
        RestrictedSeries::polynomial(p, precision, coeffs.iter().map(|c| c.rem_euclid(m) as u64).collect())
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.precision)
    }

    /// Product of two series truncated at the longer tail.
    pub fn mul(&self, other: &RestrictedSeries) -> RestrictedSeries {
        let m = self.modulus();
        let mut c = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] = addmod(c[i + j], mulmod(*a, *b, m), m);
            }
        }
        RestrictedSeries {
            p: self.p,
            precision: self.precision,
            coeffs: c,
            tail_slope: self.tail_slope.min(other.tail_slope),
            tail_offset: self.tail_offset.min(other.tail_offset),
        }
    }

    /// Value at `x` modulo `p^precision`, valid when the tail is below precision.
    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus();
        self.coeffs.iter().rev().fold(0, |acc, &c| addmod(mulmod(acc, x, m), c, m))
    }

    /// Formal derivative evaluated at `x`.
    pub fn eval_derivative(&self, x: u64) -> u64 {
        let m = self.modulus();
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0, |acc, (n, &c)| addmod(mulmod(acc, x, m), mulmod(c, n as u64 % m, m), m))
    }

    fn tail_min(&self) -> f64 {
        self.tail_slope * (self.coeffs.len() as f64) + self.tail_offset
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StrassmanReport {
    /// Largest index attaining the minimal coefficient valuation.
    pub bound: usize,
    pub min_valuation: u32,
    /// Roots in `Z_p` found by exhaustive search, as residues mod `p^root_precision`.
    pub roots: Vec<u64>,
    pub root_precision: u32,
    /// Digits searched before every surviving class was resolved.
    pub search_depth: u32,
    /// Surviving classes that Hensel's criterion could not separate.
    pub unresolved: usize,
}

/// Strassman bound for the zeros of `s` in `Z_p`, confirmed by digit-by-digit
/// search with Hensel filtering.
pub fn strassman_count(s: &RestrictedSeries) -> Result<StrassmanReport> {
    let (p, k) = (s.p, s.precision);
    if s.tail_min() < k as f64 {
        return Err(Error::PrecisionExhausted("the tail is not below the coefficient precision".into()));
    }
    let vals: Vec<u32> = s.coeffs.iter().map(|&c| if c == 0 { k } else { vp_residue(c, p, k) }).collect();
    let min_valuation = *vals.iter().min().ok_or(Error::ZeroSeries)?;
    if min_valuation >= k {
        return Err(Error::ZeroSeries);
    }
    let bound = vals.iter().rposition(|&v| v == min_valuation).expect("minimum is attained");
    let m = s.modulus();
    let val = |x: u64| if x == 0 { k } else { vp_residue(x, p, k) };

    // Classes x mod p^j with f(x) = 0 mod p^j, refined until Hensel resolves each.
    let mut live: Vec<u64> = vec![0];
    let mut resolved: Vec<u64> = Vec::new();
    let mut depth = 0u32;
    let mut max_vd = 0u32;
    let mut pj = 1u64;
    while !live.is_empty() && depth + 1 < k {
        let next_pj = pj * p;
        let mut next = Vec::new();
        for &x in &live {
            for d in 0..p {
                let y = x + d * pj;
                if val(s.eval(y)) > depth {
                    next.push(y);
                }
            }
        }
        depth += 1;
        pj = next_pj;
        live.clear();
        for y in next {
            let vf = val(s.eval(y));
            let vd = val(s.eval_derivative(y));
            // With v(f'(y)) < depth the class mod p^depth lies in a disc where f'
            // has constant valuation, so it holds at most one root; Hensel puts
            // one within p^{v(f) - v(f')} of y.
            if vd < depth && vf >= depth + vd {
                max_vd = max_vd.max(vd);
                resolved.push(newton(s, y, m));
            } else {
                live.push(y);
            }
        }
    }
    let root_precision = k - max_vd;
    let rm = p.pow(root_precision);
    let mut roots: Vec<u64> = resolved.iter().map(|r| r % rm).collect();
    roots.sort_unstable();
    Ok(StrassmanReport { bound, min_valuation, roots, root_precision, search_depth: depth, unresolved: live.len() })
}

fn newton(s: &RestrictedSeries, mut x: u64, m: u64) -> u64 {
    let p = s.p;
    for _ in 0..2 * s.precision {
        let f = s.eval(x);
        if f == 0 {
            break;
        }
        let d = s.eval_derivative(x);
        let vd = vp_residue(d, p, s.precision);
        let pv = p.pow(vd);
        let Some(u) = crate::util::invmod((d / pv) % m, m) else { break };
        // f(x) is divisible by p^vd inside the Hensel disc.
        let step = mulmod(f / pv, u, m);
        x = submod(x, step, m);
    }
    x
}
