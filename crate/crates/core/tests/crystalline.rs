use deltaform::crystalline::*;
use deltaform::tower::Tower;
use deltaform::words::Word;
use num_rational::Ratio;

fn ordinary() -> Vec<&'static CatalogCurve> {
    CATALOG.iter().filter(|c| !c.label.ends_with("ss")).collect()
}

#[test]
fn point_counts_against_brute_force() {
    // Projective count by enumerating all (x, y) pairs.
    for c in CATALOG {
        let p = c.p as i64;
        let mut n = 1;
        for x in 0..p {
            for y in 0..p {
                if (y * y - (x * x * x + c.a4 * x + c.a6)).rem_euclid(p) == 0 {
                    n += 1;
                }
            }
        }
        let ap = count_points_ap(c.p, c.a4, c.a6).unwrap();
        assert_eq!(ap, p + 1 - n, "{}", c.label);
        assert!((ap * ap) as f64 <= 4.0 * p as f64);
    }
    // y^2 = x^3 + x + 1 over F_5 has 9 points.
    assert_eq!(count_points_ap(5, 1, 1).unwrap(), -3);
}

#[test]
fn supersingular_and_twists() {
    assert_eq!(count_points_ap(5, 0, 1).unwrap() % 5, 0);
    assert!(matches!(kedlaya_frobenius(5, 0, 1, 6), Err(deltaform::Error::NotOrdinary)));
    // Twist by a non-square d: y^2 = x^3 + d^2 a4 x + d^3 a6.
    for c in ordinary() {
        let p = c.p as i64;
        let d = (2..p).find(|&d| (1..p).all(|y| (y * y - d).rem_euclid(p) != 0)).unwrap();
        let tw = count_points_ap(c.p, c.a4 * d * d, c.a6 * d * d * d).unwrap();
        assert_eq!(tw, -count_points_ap(c.p, c.a4, c.a6).unwrap(), "{}", c.label);
    }
    assert!(matches!(count_points_ap(5, 0, 0), Err(deltaform::Error::BadReduction)));
}

#[test]
fn frobenius_trace_det_and_unit_root() {
    for c in ordinary() {
        let d = kedlaya_frobenius(c.p, c.a4, c.a6, 10).unwrap();
        assert!(d.trace_matches_ap(), "{}: trace", c.label);
        assert!(d.det_is_p(), "{}: det", c.label);
        let m = d.modulus();
        let u = d.unit_root().unwrap();
        assert_eq!(u % c.p, (d.ap.rem_euclid(c.p as i64)) as u64);
        // u is a root of X^2 - a_p X + p.
        let ap = d.ap.rem_euclid(m as i64) as u128;
        let uu = u as u128;
        assert_eq!((uu * uu % m as u128 + m as u128 * 2 - ap * uu % m as u128 + c.p as u128) % m as u128, 0);
    }
}

#[test]
fn frobenius_pairing_compatibility() {
    let d = kedlaya_frobenius(7, 1, 3, 8).unwrap();
    let m = d.modulus();
    let e = [[1, 0], [0, 1]];
    for a in e {
        for b in e {
            let lhs = d.cup(d.apply(a), d.apply(b));
            let rhs = (d.p as u128 * d.cup(a, b) as u128 % m as u128) as u64;
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn hodge_filtration_is_divisible_by_p() {
    for c in ordinary() {
        let d = kedlaya_frobenius(c.p, c.a4, c.a6, 8).unwrap();
        assert_eq!(d.frob[1][0] % c.p, 0, "{}", c.label);
    }
}

#[test]
fn classes_satisfy_the_trace_relations() {
    for c in ordinary() {
        let t = Tower::new(c.p, 2, 0, 1, 10).unwrap();
        let d = kedlaya_frobenius(c.p, c.a4, c.a6, 10).unwrap();
        let f = crystalline_classes(&t, &d, 2, 2).unwrap();
        let f1 = f.tilde("1").unwrap();
        let f11 = f.tilde("11").unwrap();
        let f111 = f.pair("11", "1").unwrap();
        let ap = t.k_int(d.ap);
        let r1 = t.k_sub(f11, &t.k_mul(&ap, f1));
        let r2 = t.k_sub(f111, &t.k_mul_p_pow(f1, 1));
        assert!(t.k_valuation(&r1).at_least(Ratio::from_integer(8)), "{}", c.label);
        assert!(t.k_valuation(&r2).at_least(Ratio::from_integer(8)), "{}", c.label);
        // All directions agree on Z_p.
        assert_eq!(f.tilde("1").unwrap(), f.tilde("2").unwrap());
        assert!(t.k_is_zero(f.pair("1", "2").unwrap()));
        assert!(t.k_is_zero(f.pair("11", "22").unwrap()));
        // Antisymmetry.
        let s = t.k_add(f.pair("11", "1").unwrap(), f.pair("1", "11").unwrap());
        assert!(t.k_is_zero(&s));
        let is_cm = c.label.ends_with("cm");
        assert_eq!(t.k_is_zero(f1), is_cm, "{}", c.label);
    }
}

#[test]
fn canonical_lift_has_vanishing_class() {
    for c in CATALOG.iter().filter(|c| c.label.ends_with("cm")) {
        let t = Tower::new(c.p, 2, 0, 1, 10).unwrap();
        let d = kedlaya_frobenius(c.p, c.a4, c.a6, 10).unwrap();
        let v = crystalline_values(&t, &d, 1).unwrap();
        assert!(t.k_valuation(&v.f[1]).at_least(Ratio::from_integer(8)), "{}", c.label);
        assert!(d.frob[1][0] == 0 && d.frob[0][1] == 0, "{}: {:?}", c.label, d.frob);
    }
}

#[test]
fn catalog_lookup() {
    assert_eq!(catalog_curve("catalog#1").unwrap().label, "5a");
    assert_eq!(catalog_curve("11a").unwrap().p, 11);
    assert!(catalog_curve("catalog#99").is_err());
    let _ = Word::empty();
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

    /// `f_mu(E, lambda omega) = lambda^2 f_mu(E, omega)` over `Z_p`, and the ASD
    /// congruences are unchanged when the log and the classes are rescaled together.
    #[test]
    fn classes_rescale_with_the_differential(k in 0usize..4, lam in 1u64..5u64.pow(8)) {
        use deltaform::characters::{asd_check, AsdValues};
        use deltaform::formal::{formal_log, WeierstrassCurve};
        use deltaform::tower::FrobeniusFamily;
        proptest::prop_assume!(lam % 5 != 0);
        let c = &ordinary()[k];
        proptest::prop_assume!(c.p == 5);
        let t = Tower::new(5, 2, 0, 1, 8).unwrap();
        let d = kedlaya_frobenius(5, c.a4, c.a6, 8).unwrap();
        let base = crystalline_values(&t, &d, 2).unwrap();
        let scaled = crystalline_values_for_form(&t, &d, 2, [lam, 0]).unwrap();
        let l = t.k_from(&t.from_residue(lam));
        let l2 = t.k_mul(&l, &l);
        for a in 0..=2 {
            proptest::prop_assert!(t.k_is_zero(&t.k_sub(&scaled.f[a], &t.k_mul(&l2, &base.f[a]))));
            for b in 0..=2 {
                let lhs = &scaled.pair[a][b];
                proptest::prop_assert!(t.k_is_zero(&t.k_sub(lhs, &t.k_mul(&l2, &base.pair[a][b]))));
            }
        }
        let curve = WeierstrassCurve::from_ints(&t, c.a4, c.a6).unwrap();
        let log = formal_log(&t, &curve, 25 * 8).unwrap().scaled(&t, &t.from_residue(lam));
        let fam = FrobeniusFamily::new(t.clone(), vec![0]).unwrap();
        let vals = AsdValues { ftilde_mu: scaled.f[2].clone(), ftilde_nu: scaled.f[1].clone(), f_mu_nu: scaled.pair[2][1].clone() };
        let mu = Word::parse("11").unwrap();
        let rep = asd_check(&fam, &log, &vals, &mu, &Word::letter(1), 8).unwrap();
        proptest::prop_assert!(rep.all_pass);
    }
}
