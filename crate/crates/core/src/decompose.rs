//! Exact decomposition of a triple over the basis `Im(beta)`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::basis::{Category, Generators};
use crate::error::{Error, Result};
use crate::quadfield::{kronecker, primes_up_to, Modulus, PrimeIdeal, QuadInt};
use crate::triples::Triple;

const TRIAL_LIMIT: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub m: u64,
    pub input: Triple,
    /// `(p, s)` sorted by `p`, zero coefficients omitted.
    pub terms: Vec<(u64, i64)>,
    pub special_coeff: i64,
    pub verified: bool,
}

impl Decomposition {
    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "input": self.input.to_json(),
            "terms": self.terms.iter().map(|&(p, s)| json!({"p": p, "coeff": s})).collect::<Vec<_>>(),
            "special": self.special_coeff,
            "verified": self.verified,
        })
    }

    pub fn coeff(&self, p: u64) -> i64 {
        self.terms.iter().find(|t| t.0 == p).map_or(0, |t| t.1)
    }
}

/// Prime factorisation of `|n|`, `n != 0`.
pub(crate) fn factor(n: &BigInt) -> Vec<(BigUint, u32)> {
    let mut n = n.magnitude().clone();
    let mut out = Vec::new();
    if n.is_zero() {
        return out;
    }
    for p in primes_up_to(TRIAL_LIMIT) {
        let bp = BigUint::from(p);
        let mut e = 0;
        while (&n % &bp).is_zero() {
            n /= &bp;
            e += 1;
        }
        if e > 0 {
            out.push((bp, e));
        }
        if n.is_one() {
            return out;
        }
    }
    let rest: Vec<(BigUint, u32)> = match n.to_u64() {
        Some(small) => num_prime::nt_funcs::factorize64(small)
            .into_iter()
            .map(|(p, e)| (BigUint::from(p), e as u32))
            .collect(),
        None => num_prime::nt_funcs::factorize(n)
            .into_iter()
            .map(|(p, e)| (p, e as u32))
            .collect(),
    };
    out.extend(rest);
    out
}

fn valuation(n: &BigInt, p: u64) -> u32 {
    if n.is_zero() {
        return u32::MAX;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut k = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        k += 1;
    }
    k
}

/// The primitive element `(a - b sqrt(-m)) / 2^e` attached to `t`, where `e = 1` exactly
/// when `c` is even (only possible for discriminant `-m`).
fn triple_element(modulus: &Modulus, t: &Triple) -> Result<QuadInt> {
    let even = (t.c() % 2u32).is_zero();
    QuadInt::new(modulus, t.a().clone(), -t.b().clone(), even)
}

/// Prime ideal factorisation of the primitive element attached to `t`.
///
/// For odd `c` this is `<a - b sqrt(-m)>`; for even `c` the rational factor `<2>` is
/// removed first, so all exponents are even and their norms multiply to `(c / 2)^2`.
pub fn ideal_valuations(modulus: &Modulus, t: &Triple) -> Result<BTreeMap<PrimeIdeal, u32>> {
    if t.m() != modulus.m() {
        return Err(Error::ModulusMismatch(modulus.m(), t.m()));
    }
    let z = triple_element(modulus, t)?;
    let mut out = BTreeMap::new();
    for (p, _) in factor(&z.norm(modulus)) {
        let p = p
            .to_u64()
            .ok_or_else(|| Error::FactorTooLarge(p.to_string()))?;
        for ideal in [PrimeIdeal::lifted(p), PrimeIdeal::lifted(p).conjugate()] {
            let v = ideal.valuation(modulus, &z)?;
            if v > 0 {
                out.insert(ideal, v);
            }
            if p == 2 && kronecker(modulus, 2) != 1 {
                break;
            }
        }
    }
    Ok(out)
}

/// Weight of `q` in the third component: its valuation, or for `q = 2` the valuation of
/// `c / 2` when `c` is even.
fn weight(t: &Triple, q: u64) -> u32 {
    let v = valuation(t.c(), q);
    if q == 2 {
        v.saturating_sub(1)
    } else {
        v
    }
}

fn phase(gens: &Generators, q: u64) -> Result<u8> {
    Ok(match gens.beta(q)?.category {
        Category::Composite => 0,
        Category::Pillar(_) => 1,
        Category::L0 => 2,
    })
}

/// Express `t` as `sum s_p beta(p) + special_coeff * [q, r, 4]`.
///
/// `bound = None` lets the basis grow to the largest prime factor of `c`.
pub fn decompose(gens: &Generators, t: &Triple, bound: Option<u64>) -> Result<Decomposition> {
    let modulus = gens.modulus();
    if t.m() != modulus.m() {
        return Err(Error::ModulusMismatch(modulus.m(), t.m()));
    }
    let special = gens.special().cloned();
    let two_in_basis = kronecker(modulus, 2) == 1 && special.is_none();

    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for (p, _) in factor(t.c()) {
        let p = p
            .to_u64()
            .ok_or_else(|| Error::FactorTooLarge(p.to_string()))?;
        if p == 2 && !two_in_basis {
            continue;
        }
        if let Some(bound) = bound {
            if p > bound {
                return Err(Error::BeyondBound { p, bound });
            }
        }
        primes.insert(p);
    }
    primes.extend(gens.table().pillars().iter().map(|pl| pl.p()));
    if !two_in_basis {
        primes.remove(&2);
    }
    let mut order = Vec::new();
    for &q in &primes {
        order.push((phase(gens, q)?, q));
    }
    order.sort();

    let mut cur = t.clone();
    let mut coeffs: BTreeMap<u64, i64> = BTreeMap::new();
    for &(_, q) in &order {
        let b = gens.beta(q)?.triple;
        loop {
            let w = weight(&cur, q);
            if w == 0 {
                break;
            }
            let minus = cur.sub(&b)?;
            let plus = cur.add(&b)?;
            let (wm, wp) = (weight(&minus, q), weight(&plus, q));
            if wm < w && wm <= wp {
                cur = minus;
                *coeffs.entry(q).or_default() += 1;
            } else if wp < w {
                cur = plus;
                *coeffs.entry(q).or_default() -= 1;
            } else {
                return Err(Error::Stalled(q));
            }
        }
    }

    let mut special_coeff = 0i64;
    if !cur.is_identity() {
        let c = cur.c();
        let n = valuation(c, 2);
        let power_of_two = c.is_positive() && (c >> n as usize).is_one();
        let resolved = match (&special, power_of_two) {
            (Some(s), true) => (1..=n as i64)
                .flat_map(|k| [k, -k])
                .find(|&k| s.scalar_mul(k) == cur),
            _ => None,
        };
        match resolved {
            Some(k) => special_coeff = k,
            None if power_of_two => return Err(Error::ResidualPowerOfTwo(cur.to_string())),
            None => return Err(Error::Stalled(0)),
        }
    }

    let terms: Vec<(u64, i64)> = coeffs.into_iter().filter(|&(_, s)| s != 0).collect();
    let back = recombine(gens, &terms, special_coeff)?;
    if &back != t {
        return Err(Error::VerificationFailed);
    }
    Ok(Decomposition {
        m: modulus.m(),
        input: t.clone(),
        terms,
        special_coeff,
        verified: true,
    })
}

/// `sum s * beta(p) + special_coeff * [q, r, 4]`.
pub fn recombine(gens: &Generators, terms: &[(u64, i64)], special_coeff: i64) -> Result<Triple> {
    let m = gens.modulus().m();
    let mut acc = Triple::identity(m);
    for &(p, s) in terms {
        acc = acc.add(&gens.beta(p)?.triple.scalar_mul(s))?;
    }
    if special_coeff != 0 {
        let s = gens
            .special()
            .ok_or_else(|| Error::NoGenerator("no [q, r, 4] element for this modulus".into()))?;
        acc = acc.add(&s.scalar_mul(special_coeff))?;
    }
    Ok(acc)
}
