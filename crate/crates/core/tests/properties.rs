use std::collections::BTreeMap;
use std::sync::OnceLock;

use almost_pyth::basis::compute_l;
use almost_pyth::cache::CacheDocument;
use almost_pyth::decompose::ideal_valuations;
use almost_pyth::quadfield::{kronecker, qi_mul, qi_norm};
use almost_pyth::{
    decompose, recombine, ClassGroupTable, Generators, Modulus, PrimeIdeal, QuadInt,
    QuotientConfig, Triple,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;

struct Setup {
    gens: Generators,
    primes: Vec<u64>,
}

fn setup(m: u64, pillars: &[u64]) -> Setup {
    let cfg = if pillars.is_empty() {
        QuotientConfig::default()
    } else {
        QuotientConfig::with_pillars(pillars.iter().map(|&p| PrimeIdeal::lifted(p)).collect())
    };
    let gens = Generators::new(ClassGroupTable::new(Modulus::new(m).unwrap(), &cfg).unwrap());
    let primes = compute_l(gens.modulus(), 250)
        .into_iter()
        .filter(|&p| !(gens.special().is_some() && p == 2))
        .collect();
    Setup { gens, primes }
}

fn setups() -> &'static [Setup] {
    static CELL: OnceLock<Vec<Setup>> = OnceLock::new();
    CELL.get_or_init(|| {
        vec![
            setup(7, &[]),
            setup(15, &[]),
            setup(23, &[3]),
            setup(974, &[]),
            setup(974, &[5, 41]),
            setup(1155, &[]),
            setup(199, &[]),
        ]
    })
}

const MODULI: [u64; 6] = [7, 15, 23, 35, 974, 199];

fn triple_from(m: u64, x: i64, y: i64) -> Triple {
    let mi = m as i64;
    Triple::normalize(m, x * x - mi * y * y, 2 * x * y, x * x + mi * y * y).unwrap()
}

fn arb_triple() -> impl Strategy<Value = (u64, i64, i64)> {
    (0..MODULI.len(), -80i64..80, -80i64..80)
        .prop_filter("nonzero", |(_, x, y)| *x != 0 || *y != 0)
        .prop_map(|(i, x, y)| (MODULI[i], x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_law((m, x1, y1) in arb_triple(), (x2, y2) in (-80i64..80, -80i64..80), (x3, y3) in (-80i64..80, -80i64..80)) {
        prop_assume!((x2, y2) != (0, 0) && (x3, y3) != (0, 0));
        let (a, b, c) = (triple_from(m, x1, y1), triple_from(m, x2, y2), triple_from(m, x3, y3));
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert_eq!(a.sub(&a).unwrap(), Triple::identity(m));
        prop_assert_eq!(a.scalar_mul(3), a.add(&a).unwrap().add(&a).unwrap());
    }

    #[test]
    fn odd_primes_of_c_split((m, x, y) in arb_triple()) {
        let t = triple_from(m, x, y);
        let modulus = Modulus::new(m).unwrap();
        let mut c = t.c().clone();
        let mut p = 3u64;
        while c > BigInt::from(1) && p < 100_000 {
            if (&c % p).is_zero() {
                prop_assert_eq!(kronecker(&modulus, p), 1, "p={} divides {}", p, t);
                while (&c % p).is_zero() {
                    c /= p;
                }
            }
            p += 2;
        }
    }

    #[test]
    fn valuations_even_and_conserve_norm((m, x, y) in arb_triple()) {
        let t = triple_from(m, x, y);
        let modulus = Modulus::new(m).unwrap();
        let v = ideal_valuations(&modulus, &t).unwrap();
        let mut norm = BigInt::from(1);
        for (ideal, &e) in &v {
            prop_assert_eq!(e % 2, 0);
            norm *= BigInt::from(ideal.p).pow(e);
        }
        let c = t.c().clone();
        let c = if c.is_even() { c / 2 } else { c };
        prop_assert_eq!(norm, &c * &c);
    }

    #[test]
    fn norm_is_multiplicative(u1 in -500i64..500, v1 in -500i64..500, u2 in -500i64..500, v2 in -500i64..500, i in 0..MODULI.len()) {
        let modulus = Modulus::new(MODULI[i]).unwrap();
        let x = QuadInt::integer(u1, v1);
        let y = QuadInt::integer(u2, v2);
        prop_assert_eq!(qi_norm(&modulus, &qi_mul(&modulus, &x, &y).unwrap()), qi_norm(&modulus, &x) * qi_norm(&modulus, &y));
    }

    #[test]
    fn multiples_raise_prime_power(i in 0..4usize, k in 0usize..40, n in 1u32..=6) {
        let s = &setups()[i + 2];
        let p = s.primes[k % s.primes.len()];
        prop_assume!(p != 2);
        let t = s.gens.beta(p).unwrap().triple;
        let b = valuation(t.c(), p);
        prop_assert!(b >= 1);
        prop_assert!(valuation(t.scalar_mul(n as i64).c(), p) >= n * b);
    }

    #[test]
    fn round_trip(i in 0..7usize, picks in prop::collection::vec((0usize..60, -3i64..=3), 1..=5), special in -3i64..=3) {
        let s = &setups()[i];
        let mut coeffs: BTreeMap<u64, i64> = BTreeMap::new();
        for (k, c) in picks {
            coeffs.insert(s.primes[k % s.primes.len()], c);
        }
        let special = if s.gens.special().is_some() { special } else { 0 };
        let terms: Vec<(u64, i64)> = coeffs.into_iter().filter(|&(_, c)| c != 0).collect();
        let t = recombine(&s.gens, &terms, special).unwrap();
        let d = decompose(&s.gens, &t, None).unwrap();
        prop_assert_eq!(d.terms, terms);
        prop_assert_eq!(d.special_coeff, special);
        prop_assert!(d.verified);
    }
}

fn valuation(n: &BigInt, p: u64) -> u32 {
    let mut n = n.clone();
    let mut k = 0;
    while !n.is_zero() && (&n % p).is_zero() {
        n /= p;
        k += 1;
    }
    k
}

#[test]
fn decompose_is_deterministic() {
    let s = &setups()[4];
    let t = Triple::normalize(974, 4141, 66, 4625).unwrap();
    let a = serde_json::to_string(&decompose(&s.gens, &t, None).unwrap().to_json()).unwrap();
    let b = serde_json::to_string(&decompose(&s.gens, &t, None).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (m, pillars) in [
        (974u64, vec![5u64, 41]),
        (23, vec![2]),
        (7, vec![]),
        (35, vec![]),
    ] {
        let s = setup(m, &pillars);
        let doc = CacheDocument::build(&s.gens, 200).unwrap();
        let path = dir.path().join(format!("{m}.json"));
        doc.save(&path).unwrap();
        let loaded = CacheDocument::load(&path).unwrap();
        assert_eq!(loaded, doc);
        let elements = loaded.validate(s.gens.table()).unwrap();
        assert_eq!(elements.len(), doc.basis.len());
        let fresh = setup(m, &pillars);
        let again = CacheDocument::build(&fresh.gens, 200).unwrap();
        assert_eq!(
            again.to_canonical_json(),
            std::fs::read_to_string(&path).unwrap()
        );
    }
}

#[test]
fn corrupted_cache_entries_are_rejected() {
    let s = setup(974, &[5, 41]);
    let doc = CacheDocument::build(&s.gens, 100).unwrap();
    let mut bad = doc.clone();
    bad.basis[0].triple = serde_json::json!([1, 0, 1]);
    assert!(bad.validate(s.gens.table()).is_err());
    let mut bad = doc.clone();
    bad.basis[1].triple = bad.basis[2].triple.clone();
    assert!(bad.validate(s.gens.table()).is_err());
    let mut bad = doc.clone();
    bad.structure[0].order = 6;
    assert!(bad.validate(s.gens.table()).is_err());
    let mut bad = doc;
    bad.basis.pop();
    assert!(bad.validate(s.gens.table()).is_err());
}
