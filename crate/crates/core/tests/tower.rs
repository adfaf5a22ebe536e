use deltaform::tower::*;
use deltaform::Error;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> Valuation {
    Valuation::Finite(Ratio::new(n, d))
}

/// `C_p(x, y) = (x^p + y^p - (x + y)^p) / p`.
fn c_p(t: &Tower, x: &TowerElement, y: &TowerElement) -> TowerElement {
    let p = t.p();
    let s = t.sub(&t.add(&t.pow(x, p), &t.pow(y, p)), &t.pow(&t.add(x, y), p));
    t.div_p(&s).unwrap()
}

#[test]
fn build_examples() {
    let t = Tower::new(7, 2, 1, 1, 10).unwrap();
    assert!(t.eq(&t.pow(&t.pi(), 2), &t.from_int(7)));
    assert!(t.eq(&t.zeta(), &t.from_int(-1)));
    let t = Tower::new(7, 3, 1, 1, 10).unwrap();
    assert!(t.eq(&t.pow(&t.zeta(), 3), &t.one()));
    assert!(t.as_residue(&t.zeta()).is_some());
    assert_eq!(minimal_f(5, 3, 1), Some(2));
    let t = Tower::new(5, 3, 1, 2, 10).unwrap();
    assert!(t.eq(&t.pow(&t.zeta(), 3), &t.one()) && !t.eq(&t.zeta(), &t.one()));
    assert!(matches!(Tower::new(5, 3, 1, 1, 10), Err(Error::NotEisensteinCompatible { order: 3, group: 4 })));
    assert_eq!(Tower::new(5, 2, 1, 1, 1).unwrap_err(), Error::PrecisionTooLow(1));
    assert_eq!(Tower::new(9, 2, 1, 1, 5).unwrap_err(), Error::NotPrime(9));
    assert!(Tower::new(5, 5, 1, 1, 5).is_err());
}

#[test]
fn config_and_json_round_trip() {
    let cfg: TowerConfig = serde_json::from_str(r#"{"p": 7, "l": 2, "m": 2, "K": 8}"#).unwrap();
    let t = cfg.build().unwrap();
    assert_eq!((t.f(), t.e()), (2, 4));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = t.random_element(&mut rng);
    let j = t.to_json(&a);
    assert_eq!(j.coeffs.len(), 4);
    let s = serde_json::to_string(&j).unwrap();
    let back = t.from_json(&serde_json::from_str(&s).unwrap()).unwrap();
    assert_eq!(a, back);
    assert!(t.from_json(&ElementJson { precision: 8, coeffs: vec![vec![1]] }).is_err());
}

#[test]
fn frobenius_examples() {
    let t = Tower::new(7, 2, 2, 2, 10).unwrap();
    let pi = t.pi();
    assert!(t.eq(&t.phi(0, &pi), &pi));
    assert!(t.eq(&t.phi(1, &pi), &t.mul(&t.zeta(), &pi)));
    for g in 0..6 {
        for n in [-3i64, 0, 1, 48] {
            assert!(t.eq(&t.phi(g, &t.from_int(n)), &t.from_int(n)));
        }
    }
}

#[test]
fn composition_and_tau_relation() {
    for t in
        [Tower::new(7, 2, 2, 2, 8).unwrap(), Tower::new(5, 2, 2, 1, 8).unwrap(), Tower::new(7, 3, 1, 1, 8).unwrap()]
    {
        let p = t.p();
        for g in 0..4 {
            assert!(check_tau_relation(&t, g));
            for h in 0..4 {
                for x in [t.pi(), t.zeta(), t.gen_y()] {
                    let lhs = t.phi(g, &t.phi(h, &x));
                    let rhs = t.tau_pow(g + p * h, &t.phi(0, &t.phi(0, &x)));
                    assert!(t.eq(&lhs, &rhs));
                }
            }
        }
    }
}

#[test]
fn pi_derivation_examples() {
    let t = Tower::new(3, 2, 0, 1, 10).unwrap();
    assert!(t.eq(&t.pi_derivation(0, &t.from_int(2)).unwrap(), &t.from_int(-2)));
    let t = Tower::new(7, 2, 2, 2, 10).unwrap();
    assert!(t.is_zero(&t.pi_derivation(1, &t.zero()).unwrap()));
    assert!(t.is_zero(&t.pi_derivation(1, &t.one()).unwrap()));
    // delta(pi) = (zeta pi - pi^p) / pi = zeta - pi^(p-1) for gamma = 1.
    let d = t.pi_derivation(1, &t.pi()).unwrap();
    assert!(t.eq(&d, &t.sub(&t.zeta(), &t.pi_pow(6))));
    assert_eq!(d.precision(), 9);
    let mut x = t.pi();
    for _ in 0..9 {
        x = t.pi_derivation(1, &x).unwrap();
    }
    assert!(matches!(t.pi_derivation(1, &x), Err(Error::PrecisionExhausted(_))));
}

#[test]
fn pi_derivation_axioms() {
    let t = Tower::new(5, 2, 2, 1, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let p_over_pi = t.pi_pow(t.e() - 1);
    for k in 0..50 {
        let g = k % 3;
        let x = t.random_element(&mut rng);
        let y = t.random_element(&mut rng);
        let dx = t.pi_derivation(g, &x).unwrap();
        let dy = t.pi_derivation(g, &y).unwrap();
        let sum = t.pi_derivation(g, &t.add(&x, &y)).unwrap();
        let expect = t.add(&t.add(&dx, &dy), &t.mul(&p_over_pi, &c_p(&t, &x, &y)));
        assert!(t.eq(&sum, &expect));
        let prod = t.pi_derivation(g, &t.mul(&x, &y)).unwrap();
        let p = t.p();
        let leib =
            t.add(&t.add(&t.mul(&t.pow(&x, p), &dy), &t.mul(&t.pow(&y, p), &dx)), &t.mul(&t.pi(), &t.mul(&dx, &dy)));
        assert!(t.eq(&prod, &leib));
        // phi(x) = x^p mod pi.
        assert!(t.div_pi(&t.sub(&t.phi(g, &x), &t.pow(&x, p))).is_ok());
    }
}

#[test]
fn valuation_examples() {
    let t = Tower::new(7, 2, 1, 1, 10).unwrap();
    assert_eq!(t.valuation(&t.from_int(7)), r(1, 1));
    assert_eq!(t.valuation(&t.pi()), r(1, 2));
    let u = t.from_int(3);
    assert_eq!(t.valuation(&t.mul(&t.pi_pow(3), &u)), r(3, 2));
    assert_eq!(t.valuation(&t.zero()), Valuation::Infinite);
    assert!(t.is_unit(&u) && !t.is_unit(&t.pi()));
}

#[test]
fn n_of_pi_matches_brute_force() {
    for (p, e) in [(3, 1), (3, 2), (5, 1), (5, 2), (5, 4), (7, 2), (7, 4), (7, 3), (11, 2), (13, 4), (3, 8), (5, 8)] {
        assert_eq!(n_of_pi(p, e), n_of_pi_bruteforce(p, e, p.pow(6)), "p = {p}, e = {e}");
    }
    assert_eq!(n_of_pi(3, 2), 0);
    assert_eq!(n_of_pi(7, 1), -1);
    // With the p-adic condition any ramified pi has N >= 0, because v(pi) < 1.
    assert_eq!(n_of_pi(11, 2), 0);
    // The pi-adic count is -1 exactly when e < log p, with S(z) = z.
    assert_eq!(n_pi_adic(11, 2), (-1, vec![1]));
    assert_eq!(n_pi_adic(5, 1), (-1, vec![1]));
    // e = p^(k+1) - p^k gives two minimising exponents.
    assert_eq!(n_pi_adic(3, 2), (-1, vec![1, 3]));
    assert_eq!(n_pi_adic(3, 6).1, vec![3, 9]);
    assert_eq!(n_pi_adic(7, 8), (1, vec![7]));
    assert_eq!(Tower::new(7, 2, 1, 1, 6).unwrap().n_of_pi(), n_of_pi(7, 2));
}

#[test]
fn monomial_independence_examples() {
    let t = Tower::new(7, 2, 2, 2, 8).unwrap();
    let rep = monomial_independence(&[0, 1], 7, 2, Some(&t)).unwrap();
    assert!(rep.independent && rep.collisions.is_empty());
    assert_eq!(rep.actions.len(), 7);
    assert!(monomial_independence(&[0, 1], 7, 3, Some(&t)).unwrap().independent);
    let rep = monomial_independence(&[0, 0], 7, 1, None).unwrap();
    assert!(!rep.independent);
    assert_eq!(rep.collisions, vec![("1".to_string(), "2".to_string())]);
    assert!(monomial_independence(&[3], 7, 5, None).unwrap().independent);
}

#[test]
fn inverse_and_teichmueller() {
    let t = Tower::new(7, 2, 2, 2, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let u = t.random_unit(&mut rng);
        assert!(t.eq(&t.mul(&u, &t.inv(&u).unwrap()), &t.one()));
    }
    assert_eq!(t.inv(&t.pi()).unwrap_err(), Error::NotUnit);
    let units = t.teichmuller_units();
    assert_eq!(units.len(), 48);
    for x in &units {
        assert!(t.eq(&t.phi(0, x), &t.pow(x, 7)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn valuation_is_additive(seed in any::<u64>(), j in 0usize..6, k in 0usize..6) {
        let t = Tower::new(7, 2, 2, 2, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = t.mul(&t.random_unit(&mut rng), &t.pi_pow(j));
        let b = t.mul(&t.random_unit(&mut rng), &t.pi_pow(k));
        let (Valuation::Finite(va), Valuation::Finite(vb)) = (t.valuation(&a), t.valuation(&b)) else {
            panic!("nonzero elements");
        };
        prop_assert_eq!(t.valuation(&t.mul(&a, &b)), Valuation::Finite(va + vb));
    }

    #[test]
    fn frobenius_is_a_ring_map(seed in any::<u64>(), g in 0u64..8) {
        let t = Tower::new(5, 2, 2, 1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = t.random_element(&mut rng);
        let b = t.random_element(&mut rng);
        prop_assert!(t.eq(&t.phi(g, &t.mul(&a, &b)), &t.mul(&t.phi(g, &a), &t.phi(g, &b))));
        prop_assert!(t.eq(&t.phi(g, &t.add(&a, &b)), &t.add(&t.phi(g, &a), &t.phi(g, &b))));
    }
}
