//! Generators of the triple group: the sets `L` and `L0`, generators of squared ideal
//! products, and the injective map `beta: L -> triples` whose image is a free basis.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classgroup::ClassGroupTable;
use crate::error::{Error, Result};
use crate::quadfield::{
    is_prime, kronecker, primes_up_to, splitting_type, Modulus, PrimeIdeal, QuadInt, SplitKind,
};
use crate::triples::Triple;

/// Primes `p <= bound` with Kronecker symbol `(-m/p) = 1`.
pub fn compute_l(modulus: &Modulus, bound: u64) -> Vec<u64> {
    primes_up_to(bound)
        .into_iter()
        .filter(|&p| kronecker(modulus, p) == 1)
        .collect()
}

/// Primes of `L` up to `bound` whose lifted ideal has class in `E`.
pub fn compute_l0(table: &ClassGroupTable, bound: u64) -> Vec<u64> {
    compute_l(table.modulus(), bound)
        .into_iter()
        .filter(|&p| is_in_l0(table, p))
        .collect()
}

pub(crate) fn is_in_l0(table: &ClassGroupTable, p: u64) -> bool {
    table
        .class_of_prime(p)
        .and_then(|c| table.in_two_torsion(&c.form))
        .unwrap_or(false)
}

/// Every `(u, v)` with `u, v >= 0` and `u^2 + m v^2 = n`, by a scan over `v`.
fn norm_representations(m: u64, n: u128) -> Vec<(u128, u128)> {
    let m = m as u128;
    let vmax = (n / m).sqrt();
    let mut out = Vec::new();
    for v in 0..=vmax {
        let rest = n - m * v * v;
        let u = rest.sqrt();
        if u * u == rest {
            out.push((u, v));
        }
    }
    out.sort();
    out
}

/// Coprime `(u, v)`, `u, v >= 0`, with `u^2 + m v^2 = n`, sorted by `u`.
pub fn solve_norm_equation(m: u64, n: u128) -> Vec<(u128, u128)> {
    norm_representations(m, n)
        .into_iter()
        .filter(|&(u, v)| u.gcd(&v) == 1)
        .collect()
}

/// Generator `z` of `I^2` for the ideal `I = prod Q^e`, oriented so that
/// `<z> = I^2` exactly. Inert 2 is allowed as `<2>`; it only scales `z`.
pub fn squared_ideal_generator(
    modulus: &Modulus,
    factors: &[(PrimeIdeal, u32)],
) -> Result<QuadInt> {
    let mut target: BTreeMap<PrimeIdeal, u32> = BTreeMap::new();
    let mut c: u128 = 1;
    let mut inert_two = 0u32;
    for &(ideal, e) in factors {
        if e == 0 {
            continue;
        }
        match splitting_type(modulus, ideal.p).kind {
            SplitKind::Split => {
                *target.entry(ideal).or_default() += 2 * e;
                c = c
                    .checked_mul((ideal.p as u128).pow(e))
                    .ok_or_else(|| Error::NoGenerator("overflow".into()))?;
            }
            SplitKind::Inert if ideal.p == 2 => inert_two += e,
            SplitKind::Inert => return Err(Error::NotInL(ideal.p)),
            SplitKind::Ramified if ideal.p == 2 => return Err(Error::RamifiedTwo),
            SplitKind::Ramified => return Err(Error::RamifiedFactor(ideal.p)),
        }
    }
    let den = modulus.denominator() as u128;
    let n = c
        .checked_mul(c)
        .and_then(|x| x.checked_mul(den * den))
        .ok_or_else(|| Error::NoGenerator("overflow".into()))?;
    let half = modulus.has_half_integers();
    let mut ideals: Vec<PrimeIdeal> = target.keys().copied().collect();
    for i in target.keys() {
        if !target.contains_key(&i.conjugate()) {
            ideals.push(i.conjugate());
        }
    }
    for (u, v) in norm_representations(modulus.m(), n) {
        for sign in [1i32, -1] {
            if sign == -1 && u == 0 {
                continue;
            }
            let z = QuadInt::new(modulus, BigInt::from(u) * sign, BigInt::from(v), half)?;
            let mut ok = true;
            for ideal in &ideals {
                let want = target.get(ideal).copied().unwrap_or(0);
                if ideal.valuation(modulus, &z)? != want {
                    ok = false;
                    break;
                }
            }
            if ok {
                let scale = BigInt::from(2u32).pow(2 * inert_two);
                return Ok(QuadInt {
                    u: z.u * &scale,
                    v: z.v * &scale,
                    half: z.half,
                });
            }
        }
    }
    Err(Error::NoGenerator(n.to_string()))
}

/// Triple `[a, b, c]` with `<a - b sqrt(-m)> = <z>` up to rational scaling.
fn triple_of_generator(modulus: &Modulus, z: &QuadInt) -> Result<Triple> {
    let den: u32 = if z.half { 2 } else { 1 };
    let norm = z.norm(modulus);
    let root = norm.sqrt();
    if &root * &root != norm {
        return Err(Error::NoGenerator(norm.to_string()));
    }
    Triple::normalize(modulus.m(), z.u.clone(), -z.v.clone(), root * den)
}

/// Primitive triple from the generator of `I^2`, with non-negative entries.
///
/// The class of `I` must have order at most two; otherwise no generator exists.
pub fn ideal_square_triple(modulus: &Modulus, factors: &[(PrimeIdeal, u32)]) -> Result<Triple> {
    let z = squared_ideal_generator(modulus, factors)?;
    Ok(triple_of_generator(modulus, &z)?.with_positive_entries())
}

/// The element `[q, r, 4]` that exists only for `m = 7` and `m = 15`.
pub fn special_four_element(modulus: &Modulus) -> Option<Triple> {
    if kronecker(modulus, 2) != 1 {
        return None;
    }
    solve_norm_equation(modulus.m(), 16)
        .into_iter()
        .find(|&(_, v)| v > 0)
        .map(|(u, v)| Triple::normalize(modulus.m(), u as i64, v as i64, 4).expect("solution"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    L0,
    Pillar(usize),
    Composite,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Category::L0 => write!(f, "L0"),
            Category::Pillar(j) => write!(f, "pillar{}", j + 1),
            Category::Composite => write!(f, "composite"),
        }
    }
}

/// Exponent of the pillar `P_j` (or its conjugate when `conj`) in a composite generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exponent {
    pub j: usize,
    pub a: u64,
    pub conj: bool,
}

/// `c = 2^two_pow * prod p^e`, the shape of a generator's third component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThirdShape {
    pub two_pow: u32,
    pub factors: Vec<(u64, u32)>,
}

impl ThirdShape {
    pub fn value(&self) -> BigInt {
        self.factors
            .iter()
            .fold(BigInt::from(1u32) << self.two_pow, |acc, &(p, e)| {
                acc * BigInt::from(p).pow(e)
            })
    }

    pub(crate) fn from_factors(c: &BigInt, factors: Vec<(u64, u32)>) -> Result<ThirdShape> {
        let odd: BigInt = factors.iter().fold(BigInt::from(1u32), |acc, &(p, e)| {
            acc * BigInt::from(p).pow(e)
        });
        let (q, r) = c.div_rem(&odd);
        let two_pow = q.trailing_zeros().unwrap_or(0) as u32;
        if !r.is_zero() || q != BigInt::from(1u32) << two_pow {
            return Err(Error::NoGenerator(format!(
                "{c} does not match {factors:?}"
            )));
        }
        Ok(ThirdShape { two_pow, factors })
    }
}

impl std::fmt::Display for ThirdShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut exps: BTreeMap<u64, u32> = BTreeMap::new();
        if self.two_pow > 0 {
            exps.insert(2, self.two_pow);
        }
        for &(p, e) in &self.factors {
            *exps.entry(p).or_default() += e;
        }
        let parts: Vec<String> = exps
            .iter()
            .map(|(p, e)| {
                if *e == 1 {
                    p.to_string()
                } else {
                    format!("{p}^{e}")
                }
            })
            .collect();
        if parts.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", parts.join("*"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub p: u64,
    pub triple: Triple,
    pub category: Category,
    pub exps: Vec<Exponent>,
    pub third_shape: ThirdShape,
}

fn pillar_ideal(table: &ClassGroupTable, j: usize, conj: bool) -> PrimeIdeal {
    let ideal = table.pillars()[j].ideal;
    if conj {
        ideal.conjugate()
    } else {
        ideal
    }
}

fn check_composite(table: &ClassGroupTable, p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if kronecker(table.modulus(), p) != 1 {
        return Err(Error::NotInL(p));
    }
    if table.pillar_index(p).is_some() {
        return Err(Error::IsPillar(p));
    }
    if is_in_l0(table, p) {
        return Err(Error::InL0(p));
    }
    Ok(())
}

/// Every exponent vector with `a_j <= h_j / 2` and conjugate flags that moves the class
/// of `l(p)` into `E`, by exhaustive search. Flags are only varied where `a_j > 0`, and
/// vectors preferring the unconjugated pillar come first.
pub(crate) fn exponent_candidates(table: &ClassGroupTable, p: u64) -> Result<Vec<Vec<Exponent>>> {
    check_composite(table, p)?;
    let pillars = table.pillars();
    let base = table.class_of_ideal(PrimeIdeal::lifted(p))?;
    // per pillar: the list of (a, conj) options
    let options: Vec<Vec<(u64, bool)>> = pillars
        .iter()
        .map(|pl| {
            let mut o = vec![(0, false)];
            for a in 1..=pl.h / 2 {
                o.push((a, false));
                o.push((a, true));
            }
            o
        })
        .collect();
    let classes: Vec<(usize, usize)> = (0..pillars.len())
        .map(|j| {
            Ok((
                table.class_of_ideal(pillar_ideal(table, j, false))?,
                table.class_of_ideal(pillar_ideal(table, j, true))?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut found = Vec::new();
    let mut pick = vec![0usize; pillars.len()];
    loop {
        let mut x = base;
        for (j, &k) in pick.iter().enumerate() {
            let (a, conj) = options[j][k];
            let cls = if conj { classes[j].1 } else { classes[j].0 };
            x = table.mul(x, table.pow(cls, a));
        }
        if table.mul(x, x) == table.identity_idx() {
            found.push(
                pick.iter()
                    .enumerate()
                    .map(|(j, &k)| Exponent {
                        j,
                        a: options[j][k].0,
                        conj: options[j][k].1,
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let mut j = 0;
        while j < pick.len() {
            pick[j] += 1;
            if pick[j] < options[j].len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
        if j == pick.len() {
            break;
        }
    }
    found.sort_by_key(|v| v.iter().map(|e| (e.a, e.conj)).collect::<Vec<_>>());
    if found.is_empty() {
        return Err(Error::InvalidPillars(format!(
            "no exponent vector for {p}; pillars do not generate Cl(K)/E"
        )));
    }
    Ok(found)
}

/// Canonical exponent vector of a composite prime: unconjugated pillars preferred when
/// `a_j = h_j / 2` leaves the choice open.
pub fn exponent_vector(table: &ClassGroupTable, p: u64) -> Result<Vec<Exponent>> {
    let all = exponent_candidates(table, p)?;
    let canonical = all
        .iter()
        .min_by_key(|v| v.iter().map(|e| e.conj).collect::<Vec<_>>())
        .expect("non-empty");
    Ok(canonical.clone())
}

/// `beta(p)` for a prime `p` in `L`.
pub fn beta(table: &ClassGroupTable, p: u64) -> Result<BasisElement> {
    let modulus = table.modulus();
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if kronecker(modulus, p) != 1 {
        return Err(Error::NotInL(p));
    }
    if let Some(j) = table.pillar_index(p) {
        let pl = table.pillars()[j];
        let triple = ideal_square_triple(modulus, &[(pl.ideal, pl.h as u32)])?;
        let third_shape = ThirdShape::from_factors(triple.c(), vec![(p, pl.h as u32)])?;
        return Ok(BasisElement {
            p,
            triple,
            category: Category::Pillar(j),
            exps: Vec::new(),
            third_shape,
        });
    }
    if is_in_l0(table, p) {
        let triple = ideal_square_triple(modulus, &[(PrimeIdeal::lifted(p), 1)])?;
        let third_shape = ThirdShape::from_factors(triple.c(), vec![(p, 1)])?;
        return Ok(BasisElement {
            p,
            triple,
            category: Category::L0,
            exps: Vec::new(),
            third_shape,
        });
    }
    let mut best: Option<(Triple, Vec<Exponent>)> = None;
    for exps in exponent_candidates(table, p)? {
        let mut factors = vec![(PrimeIdeal::lifted(p), 1u32)];
        for e in exps.iter().filter(|e| e.a > 0) {
            factors.push((pillar_ideal(table, e.j, e.conj), e.a as u32));
        }
        let triple = ideal_square_triple(modulus, &factors)?;
        let better = match &best {
            None => true,
            Some((t, _)) => triple.a() < t.a(),
        };
        if better {
            best = Some((triple, exps));
        }
    }
    let (triple, exps) = best.expect("at least one exponent vector");
    let mut factors = vec![(p, 1u32)];
    for e in exps.iter().filter(|e| e.a > 0) {
        factors.push((table.pillars()[e.j].p(), e.a as u32));
    }
    let third_shape = ThirdShape::from_factors(triple.c(), factors)?;
    Ok(BasisElement {
        p,
        triple,
        category: Category::Composite,
        exps,
        third_shape,
    })
}

/// Basis elements for `p in L`, `p <= bound`, plus the `[q, r, 4]` element when it exists.
///
/// For `m = 7, 15` the prime 2 is represented only by the special element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub elements: Vec<BasisElement>,
    pub special: Option<Triple>,
}

pub fn enumerate_basis(table: &ClassGroupTable, bound: u64) -> Result<Basis> {
    let special = special_four_element(table.modulus());
    let primes: Vec<u64> = compute_l(table.modulus(), bound)
        .into_iter()
        .filter(|&p| !(special.is_some() && p == 2))
        .collect();
    let elements = primes
        .par_iter()
        .map(|&p| beta(table, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Basis { elements, special })
}

/// Memoised `beta` over a fixed class group and pillar configuration.
#[derive(Debug)]
pub struct Generators {
    table: ClassGroupTable,
    special: Option<Triple>,
    memo: Mutex<HashMap<u64, BasisElement>>,
}

impl Generators {
    pub fn new(table: ClassGroupTable) -> Self {
        let special = special_four_element(table.modulus());
        Generators {
            table,
            special,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn table(&self) -> &ClassGroupTable {
        &self.table
    }

    pub fn modulus(&self) -> &Modulus {
        self.table.modulus()
    }

    pub fn special(&self) -> Option<&Triple> {
        self.special.as_ref()
    }

    pub fn beta(&self, p: u64) -> Result<BasisElement> {
        if let Some(e) = self.memo.lock().expect("poisoned").get(&p) {
            return Ok(e.clone());
        }
        let e = beta(&self.table, p)?;
        self.memo.lock().expect("poisoned").insert(p, e.clone());
        Ok(e)
    }

    /// Seed the memo with already verified elements (e.g. from a cache).
    pub fn preload(&self, elements: impl IntoIterator<Item = BasisElement>) {
        let mut memo = self.memo.lock().expect("poisoned");
        for e in elements {
            memo.insert(e.p, e);
        }
    }

    pub fn basis(&self, bound: u64) -> Result<Basis> {
        let primes: Vec<u64> = compute_l(self.modulus(), bound)
            .into_iter()
            .filter(|&p| !(self.special.is_some() && p == 2))
            .collect();
        let elements = primes
            .par_iter()
            .map(|&p| self.beta(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Basis {
            elements,
            special: self.special.clone(),
        })
    }
}

/// `true` when `t`'s entries are positive and `c` matches the declared shape.
pub fn check_element(modulus: &Modulus, e: &BasisElement) -> bool {
    let t = &e.triple;
    t.m() == modulus.m()
        && t.a().is_positive()
        && t.b().is_positive()
        && &e.third_shape.value() == t.c()
        && t.c().to_u64().is_none_or(|c| c > 1)
}
