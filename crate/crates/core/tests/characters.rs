use deltaform::characters::*;
use deltaform::crystalline::{crystalline_classes, kedlaya_frobenius, CATALOG};
use deltaform::formal::{formal_log, WeierstrassCurve};
use deltaform::symbol::sym_eval;
use deltaform::tower::{FrobeniusFamily, Tower, TowerElement};
use deltaform::words::Word;
use deltaform::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn fam(p: u64, m: u32, f: usize, k: u32, gammas: Vec<u64>) -> FrobeniusFamily {
    FrobeniusFamily::new(Tower::new(p, 2, m, f, k).unwrap(), gammas).unwrap()
}

fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

// ---- G_m ----

#[test]
fn gm_vanishes_on_one_and_torsion() {
    for fm in [fam(5, 2, 1, 12, vec![0, 1]), fam(7, 2, 2, 10, vec![0, 1])] {
        let t = fm.tower.clone();
        for i in 1..=2 {
            assert!(t.k_is_zero(&gm_character_eval(&fm, i, &t.one()).unwrap()));
            let mut torsion = t.teichmuller_units();
            torsion.push(t.zeta());
            torsion.push(t.from_int(-1));
            torsion.extend((0..t.e() as u64).map(|j| t.zeta_pow(j)));
            for (x, v) in torsion.iter().zip(gm_character_batch(&fm, i, &torsion)) {
                assert!(t.k_is_zero(&v.unwrap()), "psi_{i} of {}", t.format(x));
            }
        }
        assert_eq!(gm_character_eval(&fm, 1, &t.pi()), Err(Error::NotUnit));
    }
}

#[test]
fn gm_over_zp_matches_log_route() {
    // pi = p and phi = id: psi(x) = p^{-1} (1 - p) log x.
    let fm = fam(5, 0, 1, 12, vec![0]);
    let t = fm.tower.clone();
    assert_eq!(t.n_of_pi(), -1);
    for a in [1i64, 2, 7, 31, -4] {
        let x = t.from_int(1 + 5 * a);
        let direct = gm_character_eval(&fm, 1, &x).unwrap();
        let l = log_principal_unit(&t, &x).unwrap();
        let via_log = t.k_mul_p_pow(&t.k_scale_int(&l, 1 - 5), -1);
        assert!(t.k_is_zero(&t.k_sub(&direct, &via_log)), "x = 1 + 5*{a}");
        assert!(!t.k_is_zero(&direct));
    }
}

#[test]
fn log_of_principal_units_is_additive() {
    let t = Tower::new(5, 2, 2, 1, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = t.add(&t.one(), &t.random_nonunit(&mut rng));
        let y = t.add(&t.one(), &t.random_nonunit(&mut rng));
        let lxy = log_principal_unit(&t, &t.mul(&x, &y)).unwrap();
        let s = t.k_add(&log_principal_unit(&t, &x).unwrap(), &log_principal_unit(&t, &y).unwrap());
        assert!(t.k_is_zero(&t.k_sub(&lxy, &s)));
    }
    assert_eq!(log_one_plus(&t, &t.one()), Err(Error::LogDivergence));
}

#[test]
fn gm_is_a_homomorphism() {
    for fm in [fam(5, 2, 1, 12, vec![0, 1]), fam(7, 2, 2, 12, vec![1, 3])] {
        let t = fm.tower.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = t.random_unit(&mut rng);
            let y = t.random_unit(&mut rng);
            for i in 1..=2 {
                let lhs = gm_character_eval(&fm, i, &t.mul(&x, &y)).unwrap();
                let rhs = t.k_add(&gm_character_eval(&fm, i, &x).unwrap(), &gm_character_eval(&fm, i, &y).unwrap());
                let d = t.k_sub(&lhs, &rhs);
                assert!(t.k_is_zero(&d), "defect {}", t.k_format(&d));
            }
        }
    }
}

#[test]
fn gm_symbol_on_logs_of_principal_units() {
    let fm = fam(7, 2, 2, 12, vec![0, 1]);
    let t = fm.tower.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let x = t.add(&t.one(), &t.random_nonunit(&mut rng));
        let l = log_principal_unit(&t, &x).unwrap();
        for i in 1..=2 {
            let theta = gm_symbol(&fm, i);
            let via_symbol = t.k_mul_p_pow(&sym_eval(&fm, &theta, &l).unwrap(), -1);
            let direct = gm_character_eval(&fm, i, &x).unwrap();
            assert!(t.k_is_zero(&t.k_sub(&via_symbol, &direct)));
        }
    }
}

// ---- ASD ----

fn asd_inputs(p: u64, a4: i64, a6: i64, nmax: usize) -> (FrobeniusFamily, deltaform::formal::LogSeries, AsdValues) {
    let t = Tower::new(p, 2, 0, 1, 10).unwrap();
    let d = kedlaya_frobenius(p, a4, a6, 10).unwrap();
    let f = crystalline_classes(&t, &d, 1, 2).unwrap();
    let vals = AsdValues {
        ftilde_mu: f.tilde("11").unwrap().clone(),
        ftilde_nu: f.tilde("1").unwrap().clone(),
        f_mu_nu: f.pair("11", "1").unwrap().clone(),
    };
    let curve = WeierstrassCurve::from_ints(&t, a4, a6).unwrap();
    let log = formal_log(&t, &curve, (p * p) as usize * nmax).unwrap();
    (FrobeniusFamily::new(t, vec![0]).unwrap(), log, vals)
}

#[test]
fn asd_congruences_hold_for_the_ordinary_catalog() {
    let ordinary: Vec<_> = CATALOG.iter().filter(|c| !c.label.ends_with("ss") && c.p <= 11).collect();
    assert!(ordinary.len() >= 3);
    for c in ordinary {
        let (fm, log, vals) = asd_inputs(c.p, c.a4, c.a6, 40);
        let rep = asd_check(&fm, &log, &vals, &w("11"), &w("1"), 40).unwrap();
        assert_eq!(rep.lines.len(), 40);
        for l in &rep.lines {
            assert!(l.pass, "{} N = {}: v = {}, cert = {}", c.label, l.n, l.valuation, l.certificate);
        }
        // One-unit mutation of f~_mu.
        if c.label.ends_with("cm") {
            continue;
        }
        let t = fm.tower.clone();
        let bad = AsdValues { ftilde_mu: t.k_add(&vals.ftilde_mu, &t.k_int(1)), ..vals.clone() };
        let rep = asd_check(&fm, &log, &bad, &w("11"), &w("1"), 40).unwrap();
        assert!(rep.lines.iter().any(|l| !l.pass), "{}: mutation undetected", c.label);
    }
}

#[test]
fn asd_trivial_and_error_cases() {
    let (fm, log, _) = asd_inputs(5, 1, 1, 10);
    let t = fm.tower.clone();
    let zero = AsdValues { ftilde_mu: t.k_zero(), ftilde_nu: t.k_zero(), f_mu_nu: t.k_zero() };
    assert!(asd_check(&fm, &log, &zero, &w("11"), &w("1"), 10).unwrap().all_pass);
    assert!(matches!(
        asd_check(&fm, &log, &zero, &w("11"), &w("1"), 11),
        Err(Error::SeriesTooShort { need: 275, have: 250 })
    ));
    assert!(asd_check(&fm, &log, &zero, &w("1"), &w("11"), 5).is_err());
}

// ---- pairing ----

#[test]
fn pairing_antisymmetries_and_bilinearity() {
    let fm = fam(7, 2, 2, 10, vec![0, 1]);
    let t = fm.tower.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (mu, nu) in [("11", "1"), ("1", "2"), ("12", "21"), ("2", "22")] {
        let ctx = PairingContext::new(fm.clone(), w(mu), w(nu)).unwrap();
        for _ in 0..10 {
            let a = t.random_element(&mut rng);
            let b = t.random_element(&mut rng);
            let c = t.random_element(&mut rng);
            let ab = pairing(&ctx, &a, &b).unwrap();
            assert!(t.is_zero(&pairing(&ctx, &a, &a).unwrap()));
            assert!(t.eq(&ab, &t.neg(&pairing(&ctx, &b, &a).unwrap())));
            assert!(t.eq(&ab, &t.neg(&pairing(&ctx.swapped(), &a, &b).unwrap())));
            let lhs = pairing(&ctx, &t.add(&a, &t.scale_int(&c, 3)), &b).unwrap();
            let rhs = t.add(&ab, &t.scale_int(&pairing(&ctx, &c, &b).unwrap(), 3));
            assert!(t.eq(&lhs, &rhs));
            // Q_p-multiples of beta pair to zero.
            let lam = t.from_int(rng.gen_range(-500..500));
            assert!(t.is_zero(&pairing(&ctx, &t.mul(&lam, &b), &b).unwrap()));
        }
    }
}

#[test]
fn pairing_separates_zeta_multiples() {
    // zeta_4 is not in Q_7, so zeta pi_1 is not a Q_7-multiple of pi_1.
    let fm = fam(7, 2, 2, 10, vec![0, 1]);
    let t = fm.tower.clone();
    let pi1 = t.pi_pow(2);
    let a = t.mul(&t.zeta(), &pi1);
    for (mu, nu) in [("1", "2"), ("12", "1"), ("2", "21")] {
        let ctx = PairingContext::new(fm.clone(), w(mu), w(nu)).unwrap();
        assert!(!t.is_zero(&pairing(&ctx, &a, &pi1).unwrap()), "({mu},{nu})");
    }
    // Length-two words act on W_2 through phi^2 = id, so zeta pi_1 pairs to zero.
    let ctx = PairingContext::new(fm, w("11"), w("21")).unwrap();
    assert!(t.is_zero(&pairing(&ctx, &a, &pi1).unwrap()));
}

#[test]
fn pairing_context_rejects_bad_words() {
    let fm = fam(5, 2, 1, 8, vec![0, 1]);
    assert_eq!(PairingContext::new(fm.clone(), w("1"), w("1")).unwrap_err(), Error::DistinctWordsRequired);
    assert!(PairingContext::new(fm.clone(), w("111"), w("1")).is_err());
    assert!(PairingContext::new(fm, w("13"), w("1")).is_err());
}

#[test]
fn kernel_is_one_dimensional_at_pi_1() {
    let fm = fam(5, 2, 1, 10, vec![0, 1]);
    let t = fm.tower.clone();
    let pi1 = t.pi_pow(2);
    for (mu, nu) in [("11", "21"), ("11", "12"), ("12", "22"), ("21", "22")] {
        let ctx = PairingContext::new(fm.clone(), w(mu), w(nu)).unwrap();
        let rep = kernel_dimension(&ctx, &pi1).unwrap();
        assert_eq!(rep.qp_dimension, 4);
        assert_eq!(rep.dimension, 1, "({mu},{nu})");
        assert!(proportional(&rep.witnesses[0], pi1.coeffs(), 5, rep.precision));
    }
}

#[test]
fn kernel_is_everything_for_rational_beta_and_equal_lifts() {
    let fm = fam(5, 2, 1, 10, vec![1, 1]);
    let t = fm.tower.clone();
    for (mu, nu) in [("1", "2"), ("12", "21"), ("11", "22")] {
        let ctx = PairingContext::new(fm.clone(), w(mu), w(nu)).unwrap();
        for b in [t.from_int(5 * 3), t.from_int(25), t.zero()] {
            assert_eq!(kernel_dimension(&ctx, &b).unwrap().dimension, 4);
        }
    }
}

#[test]
fn reciprocity_on_random_admissible_pairs() {
    let fm = fam(5, 2, 1, 10, vec![0, 1]);
    let t = fm.tower.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pi2 = t.pi_pow(2);
    for k in 0..50 {
        let (mu, nu) = [("11", "1"), ("12", "21"), ("2", "1"), ("22", "12")][k % 4];
        let ctx = PairingContext::new(fm.clone(), w(mu), w(nu)).unwrap();
        let a = t.mul(&pi2, &t.random_element(&mut rng));
        let b = t.mul(&pi2, &t.random_element(&mut rng));
        let rep = reciprocity_check(&ctx, &a, &b).unwrap();
        assert!(rep.holds && rep.matches_pairing, "{rep:?}");
        let diag = reciprocity_check(&ctx, &a, &a).unwrap();
        assert!(diag.holds && diag.matches_pairing);
        assert!(t.k_is_zero(&(t.k_from(&pairing(&ctx, &a, &a).unwrap()))));
    }
    let ctx = PairingContext::new(fm, w("1"), w("2")).unwrap();
    assert_eq!(reciprocity_check(&ctx, &t.pi(), &pi2).unwrap_err(), Error::BetaTooLarge);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn beta_is_always_in_its_own_kernel(seed in any::<u64>(), pick in 0usize..4) {
        let fm = fam(5, 2, 1, 10, vec![0, 1]);
        let t: Arc<Tower> = fm.tower.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = t.random_element(&mut rng);
        prop_assume!(!t.is_zero(&b));
        let (mu, nu) = [("11", "21"), ("1", "2"), ("11", "1"), ("22", "1")][pick];
        let ctx = PairingContext::new(fm, w(mu), w(nu)).unwrap();
        match kernel_dimension(&ctx, &b) {
            Ok(rep) => prop_assert!(rep.dimension >= 1),
            Err(Error::PrecisionExhausted(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

// ---- Strassman ----

fn linear(p: u64, k: u32, a: i64) -> RestrictedSeries {
    RestrictedSeries::from_ints(p, k, &[-a, 1]).unwrap()
}

#[test]
fn strassman_basic_examples() {
    let t = RestrictedSeries::from_ints(5, 8, &[0, 1]).unwrap();
    let r = strassman_count(&t).unwrap();
    assert_eq!((r.bound, r.roots.clone()), (1, vec![0]));
    let s = RestrictedSeries::from_ints(5, 8, &[-5, 0, 1]).unwrap();
    let r = strassman_count(&s).unwrap();
    assert_eq!(r.bound, 2);
    assert!(r.roots.is_empty() && r.unresolved == 0);
    assert_eq!(strassman_count(&RestrictedSeries::from_ints(5, 8, &[0, 0]).unwrap()).unwrap_err(), Error::ZeroSeries);
    // (t - 5)(t - 10)(1 + 5t + 25t^2).
    let u = RestrictedSeries::from_ints(5, 8, &[1, 5, 25]).unwrap();
    let s = linear(5, 8, 5).mul(&linear(5, 8, 10)).mul(&u);
    let r = strassman_count(&s).unwrap();
    assert_eq!(r.bound, 2);
    let m = 5u64.pow(r.root_precision);
    assert_eq!(r.roots, vec![5 % m, 10 % m]);
}

#[test]
fn strassman_on_planted_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let p = [5u64, 7, 11][case % 3];
        let k = 8;
        let nroots = 1 + case % 3;
        let mut roots = Vec::new();
        while roots.len() < nroots {
            let a: i64 = rng.gen_range(0..(p as i64).pow(3));
            if roots.iter().all(|&b: &i64| (a - b) % p as i64 != 0) {
                roots.push(a);
            }
        }
        let mut s = RestrictedSeries::from_ints(p, k, &[1]).unwrap();
        for &a in &roots {
            s = s.mul(&linear(p, k, a));
        }
        // A unit series 1 + p g(t) has no zeros in Z_p.
        let g: Vec<i64> = (0..4).map(|j| if j == 0 { 1 } else { p as i64 * rng.gen_range(0..50) }).collect();
        s = s.mul(&RestrictedSeries::from_ints(p, k, &g).unwrap());
        let split = case % 4 != 3;
        if !split {
            // t^2 - p has no root in Z_p.
            s = s.mul(&RestrictedSeries::from_ints(p, k, &[-(p as i64), 0, 1]).unwrap());
        }
        let r = strassman_count(&s).unwrap();
        assert!(r.roots.len() <= r.bound, "case {case}");
        assert_eq!(r.unresolved, 0);
        assert_eq!(r.roots.len(), nroots, "case {case}");
        if split {
            assert_eq!(r.roots.len(), r.bound, "case {case}");
        }
        let m = p.pow(r.root_precision);
        let mut want: Vec<u64> = roots.iter().map(|&a| a as u64 % m).collect();
        want.sort_unstable();
        assert_eq!(r.roots, want);
    }
}

#[test]
fn strassman_rejects_slow_tails() {
    assert!(RestrictedSeries::new(5, 6, vec![1, 1], 0.0, 1.0).is_err());
    let s = RestrictedSeries::new(5, 6, vec![1, 1], 0.5, 0.0).unwrap();
    assert!(matches!(strassman_count(&s), Err(Error::PrecisionExhausted(_))));
    let _: Option<TowerElement> = None;
}

#[test]
fn kernel_is_one_dimensional_for_every_pair_when_lifts_separate() {
    // p = 23 is neither 1 nor -1 mod 7 and f = 3 is odd, so the six words of
    // length two act differently on pi and phi^2 fixes only Z_p in W_3.
    let fm = fam7(23, 1, 3, 10);
    let t = fm.tower.clone();
    let words: Vec<Word> = ["11", "12", "21", "22"].iter().map(|s| w(s)).collect();
    for (i, mu) in words.iter().enumerate() {
        for nu in &words[i + 1..] {
            let ctx = PairingContext::new(fm.clone(), mu.clone(), nu.clone()).unwrap();
            let rep = kernel_dimension(&ctx, &t.pi()).unwrap();
            assert_eq!((rep.qp_dimension, rep.dimension), (21, 1), "({mu},{nu})");
            assert!(proportional(&rep.witnesses[0], t.pi().coeffs(), 23, rep.precision));
        }
    }
    // In the l = 2 tower over Z_5 the words 12 and 21 agree on pi_1 and
    // constants join the kernel.
    let fm = fam(5, 2, 1, 10, vec![0, 1]);
    let ctx = PairingContext::new(fm.clone(), w("12"), w("21")).unwrap();
    assert!(kernel_dimension(&ctx, &fm.tower.pi_pow(2)).unwrap().dimension > 1);
}

fn fam7(p: u64, m: u32, f: usize, k: u32) -> FrobeniusFamily {
    FrobeniusFamily::new(Tower::new(p, 7, m, f, k).unwrap(), vec![0, 1]).unwrap()
}
