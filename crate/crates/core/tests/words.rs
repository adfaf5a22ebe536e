use deltaform::tower::{FrobeniusFamily, Tower};
use deltaform::words::*;
use deltaform::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

fn phi(s: &str) -> Weight {
    Weight::monomial(w(s), 1)
}

#[test]
fn word_counts_and_order() {
    let s: Vec<String> = words_up_to(2, 1).iter().map(|x| x.to_string()).collect();
    assert_eq!(s, ["", "1", "2"]);
    assert_eq!(words_up_to(2, 2).len(), 7);
    assert_eq!(words_up_to(3, 3).len(), 40);
    assert_eq!(d_count(3, 3), 40);
    for n in 1..4 {
        for r in 0..4 {
            let ws = words_up_to(n, r);
            assert_eq!(ws.len(), d_count(n, r));
            assert!(ws.windows(2).all(|p| p[0] < p[1]));
        }
    }
}

#[test]
fn canonical_index_golden_file() {
    let golden = include_str!("golden/words_n2_r3.txt");
    let mut lines = golden.lines();
    for (k, word) in words_up_to(2, 3).iter().enumerate() {
        let line = lines.next().expect("golden file too short");
        let (idx, s) = line.split_once(' ').unwrap_or((line, ""));
        assert_eq!(idx.parse::<usize>().unwrap(), k);
        assert_eq!(s, word.to_string());
        assert_eq!(word.canonical_index(2).unwrap(), k);
    }
    assert!(lines.next().is_none());
    // Index of a concatenation, from the two factors alone.
    for a in words_up_to(3, 2) {
        for b in words_up_to(3, 2) {
            let ab = a.concat(&b);
            let pos = words_up_to(3, 4).iter().position(|x| *x == ab).unwrap();
            assert_eq!(ab.canonical_index(3).unwrap(), pos);
        }
    }
    assert!(w("3").canonical_index(2).is_err());
}

#[test]
fn cocycle_examples() {
    assert_eq!(cocycle_weight(&w("2")).unwrap(), Weight::monomial(Word::empty(), 1));
    assert_eq!(cocycle_weight(&w("12")).unwrap(), Weight::monomial(Word::empty(), 1).add(&phi("1")));
    assert_eq!(cocycle_weight(&w("121")).unwrap(), Weight::monomial(Word::empty(), 1).add(&phi("1")).add(&phi("12")));
    assert_eq!(cocycle_weight(&Word::empty()).unwrap_err(), Error::EmptyWord);
}

#[test]
fn lambda_pow_examples_and_laws() {
    let t = Tower::new(7, 2, 2, 2, 8).unwrap();
    let fam = FrobeniusFamily::new(t.clone(), vec![0, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert!(t.eq(&lambda_pow(&fam, &t.one(), &phi("12").add(&phi("2"))).unwrap(), &t.one()));
    let l = t.random_unit(&mut rng);
    let k = Weight::monomial(Word::empty(), 5);
    assert!(t.eq(&lambda_pow(&fam, &l, &k).unwrap(), &t.pow(&l, 5)));
    let z = t.zeta();
    assert!(t.eq(&lambda_pow(&fam, &z, &phi("1")).unwrap(), &t.pow(&z, 7)));
    for _ in 0..10 {
        let l = t.random_unit(&mut rng);
        let w1 = phi("1").add(&Weight::monomial(w("2"), -2));
        let w2 = Weight::monomial(Word::empty(), 3).add(&phi("21"));
        let sum = lambda_pow(&fam, &l, &w1.add(&w2)).unwrap();
        let prod = t.mul(&lambda_pow(&fam, &l, &w1).unwrap(), &lambda_pow(&fam, &l, &w2).unwrap());
        assert!(t.eq(&sum, &prod));
        let lw2 = lambda_pow(&fam, &l, &w2).unwrap();
        assert!(t.eq(&lambda_pow(&fam, &l, &w1.mul(&w2)).unwrap(), &lambda_pow(&fam, &lw2, &w1).unwrap()));
    }
    assert_eq!(lambda_pow(&fam, &t.pi(), &Weight::monomial(w("1"), -1)).unwrap_err(), Error::NotUnit);
    // pi^{w(mu)} uses only non-negative exponents.
    let pw = lambda_pow(&fam, &t.pi(), &cocycle_weight(&w("12")).unwrap()).unwrap();
    assert!(t.eq(&pw, &t.mul(&t.pi(), &t.phi(0, &t.pi()))));
}

#[test]
fn serialization() {
    let s = serde_json::to_string(&vec![Word::empty(), w("12")]).unwrap();
    assert_eq!(s, r#"["","12"]"#);
    let back: Vec<Word> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, vec![Word::empty(), w("12")]);
    let wt = Weight::monomial(Word::empty(), 1).add(&Weight::monomial(w("21"), -3));
    assert_eq!(serde_json::to_string(&wt).unwrap(), r#"{"":1,"21":-3}"#);
    assert!(Word::parse("1a").is_err());
}

fn arb_weight() -> impl Strategy<Value = Weight> {
    prop::collection::vec(("[12]{0,3}", -5i64..6), 0..5).prop_map(|v| {
        v.into_iter().fold(Weight::zero(), |acc, (s, m)| acc.add(&Weight::monomial(Word::parse(&s).unwrap(), m)))
    })
}

proptest! {
    #[test]
    fn degree_is_a_ring_homomorphism(a in arb_weight(), b in arb_weight()) {
        prop_assert_eq!(a.add(&b).degree(), a.degree() + b.degree());
        prop_assert_eq!(a.mul(&b).degree(), a.degree() * b.degree());
    }

    #[test]
    fn concatenation_is_associative(a in "[123]{0,3}", b in "[123]{0,3}", c in "[123]{0,3}") {
        let (a, b, c) = (w(&a), w(&b), w(&c));
        prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
        prop_assert_eq!(a.concat(&Word::empty()), a.clone());
        prop_assert_eq!(a.concat(&b).len(), a.len() + b.len());
    }

    #[test]
    fn weight_product_distributes(a in arb_weight(), b in arb_weight(), c in arb_weight()) {
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }
}
