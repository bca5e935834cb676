//! The ideal class group of `Q(sqrt(-m))` as reduced binary quadratic forms.
//!
//! The whole group is enumerated and a full multiplication table is kept, which is fine
//! for the class numbers met at desk scale (a few hundred). The quotient `Cl(K)/E` by the
//! 2-torsion `E` is realised as the subgroup of squares: `x -> x^2` has kernel `E`, so
//! `Cl(K)/E` is isomorphic to `Cl(K)^2`, and a class lies in `E` iff its square is trivial.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadfield::{is_prime, kronecker, splitting_type, Modulus, PrimeIdeal, SplitKind};

/// A primitive positive definite form `a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormClass {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl FormClass {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let FormClass { a, b, c } = *self;
        -a < b && b <= a && a <= c && !((a == c || a == -b) && b < 0)
    }

    /// Order at most two: `b = 0`, `a = b` or `a = c` for a reduced form.
    pub fn is_ambiguous(&self) -> bool {
        self.b == 0 || self.a == self.b || self.a == self.c
    }

    pub fn principal(disc: i64) -> FormClass {
        let b = disc.rem_euclid(2);
        FormClass {
            a: 1,
            b,
            c: (b * b - disc) / 4,
        }
    }

    pub fn inverse(&self) -> FormClass {
        reduce_unchecked(self.a as i128, -self.b as i128, self.c as i128)
    }

    pub fn to_array(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }
}

impl std::fmt::Display for FormClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

fn reduce_unchecked(mut a: i128, mut b: i128, mut c: i128) -> FormClass {
    let disc = b * b - 4 * a * c;
    loop {
        if b <= -a || b > a {
            // bring b into (-a, a]
            let two_a = 2 * a;
            let mut nb = b.rem_euclid(two_a);
            if nb > a {
                nb -= two_a;
            }
            b = nb;
            c = (b * b - disc) / (4 * a);
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            continue;
        }
        if (a == c || a == -b) && b < 0 {
            b = -b;
        }
        return FormClass {
            a: a as i64,
            b: b as i64,
            c: c as i64,
        };
    }
}

/// Gauss reduction of `(a, b, c)` for the given discriminant.
pub fn reduce_form(disc: i64, a: i64, b: i64, c: i64) -> Result<FormClass> {
    let found = b as i128 * b as i128 - 4 * a as i128 * c as i128;
    if found != disc as i128 {
        return Err(Error::DiscriminantMismatch {
            expected: disc,
            found: found as i64,
        });
    }
    if a <= 0 || a.gcd(&b).gcd(&c) != 1 {
        return Err(Error::BadForm(a, b, c));
    }
    Ok(reduce_unchecked(a as i128, b as i128, c as i128))
}

/// Dirichlet composition followed by reduction.
pub fn compose_forms(f: &FormClass, g: &FormClass) -> Result<FormClass> {
    if f.disc() != g.disc() {
        return Err(Error::DiscriminantMismatch {
            expected: f.disc(),
            found: g.disc(),
        });
    }
    Ok(compose_unchecked(f, g))
}

fn compose_unchecked(f: &FormClass, g: &FormClass) -> FormClass {
    let disc = f.disc() as i128;
    let (f, g) = if f.a > g.a { (g, f) } else { (f, g) };
    let (a1, b1) = (f.a as i128, f.b as i128);
    let (a2, b2, c2) = (g.a as i128, g.b as i128, g.c as i128);
    let s = (b1 + b2) / 2;
    let n = b2 - s;
    let (y1, d) = if a2 % a1 == 0 {
        (0, a1)
    } else {
        let e = a2.extended_gcd(&a1);
        (e.x, e.gcd)
    };
    let (x2, y2, d1) = if s % d == 0 {
        (0, -1, d)
    } else {
        let e = s.extended_gcd(&d);
        (e.x, -e.y, e.gcd)
    };
    let v1 = a1 / d1;
    let v2 = a2 / d1;
    let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
    let b3 = b2 + 2 * v2 * r;
    let a3 = v1 * v2;
    let c3 = (b3 * b3 - disc) / (4 * a3);
    reduce_unchecked(a3, b3, c3)
}

/// All reduced forms of discriminant `disc`, sorted.
pub fn reduced_forms(disc: i64) -> Vec<FormClass> {
    let mut forms = Vec::new();
    let amax = ((-disc) as f64 / 3.0).sqrt() as i64 + 1;
    for a in 1..=amax {
        for b in (-a + 1)..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = FormClass {
                a,
                b,
                c: num / (4 * a),
            };
            if f.is_reduced() && a.gcd(&b).gcd(&f.c) == 1 {
                forms.push(f);
            }
        }
    }
    forms.sort();
    forms
}

/// Which cyclic decomposition to use for `Cl(K)` and `Cl(K)/E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CyclicDecomposition {
    #[default]
    InvariantFactors,
    Primary,
}

/// How the pillar ideals `P_j` generating `Cl(K)/E` are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuotientConfig {
    /// Explicit pillar ideals; `None` runs the greedy selection over split primes.
    pub pillars: Option<Vec<PrimeIdeal>>,
    pub decomposition: CyclicDecomposition,
}

impl QuotientConfig {
    pub fn with_pillars(pillars: Vec<PrimeIdeal>) -> Self {
        QuotientConfig {
            pillars: Some(pillars),
            decomposition: CyclicDecomposition::default(),
        }
    }

    /// Stable short name, used for cache file names.
    pub fn key(&self) -> String {
        let mode = match self.decomposition {
            CyclicDecomposition::InvariantFactors => "",
            CyclicDecomposition::Primary => "-primary",
        };
        match &self.pillars {
            None => format!("auto{mode}"),
            Some(ps) => {
                let parts: Vec<String> = ps
                    .iter()
                    .map(|p| format!("{}{}", p.p, if p.conj { "c" } else { "" }))
                    .collect();
                format!("p{}{mode}", parts.join("-"))
            }
        }
    }
}

/// A chosen ideal `P_j` over `p` whose image generates a cyclic factor of order `h` in `Cl(K)/E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pillar {
    pub ideal: PrimeIdeal,
    pub root: u64,
    pub h: u64,
    pub class: FormClass,
}

impl Pillar {
    pub fn p(&self) -> u64 {
        self.ideal.p
    }
}

/// Class of a prime under the lifting, `f(p)`; inert primes map to the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeClass {
    pub form: FormClass,
    pub inert: bool,
}

/// Coordinates of an element of `Cl(K)/E` with respect to the pillar generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuotientClass(pub Vec<u64>);

impl QuotientClass {
    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// `Cl(K)` with its structure, 2-torsion and the quotient by the 2-torsion.
#[derive(Debug, Clone)]
pub struct ClassGroupTable {
    modulus: Modulus,
    forms: Vec<FormClass>,
    index: HashMap<FormClass, usize>,
    table: Vec<Vec<u32>>,
    identity: usize,
    structure: Vec<(usize, u64)>,
    two_torsion: Vec<usize>,
    squares: Vec<usize>,
    pillars: Vec<Pillar>,
    quotient_coords: HashMap<usize, Vec<u64>>,
    config: QuotientConfig,
}

const PILLAR_SEARCH_LIMIT: u64 = 50_000_000;

impl ClassGroupTable {
    pub fn new(modulus: Modulus, config: &QuotientConfig) -> Result<Self> {
        let disc = modulus.disc();
        let forms = reduced_forms(disc);
        let index: HashMap<FormClass, usize> =
            forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let table: Vec<Vec<u32>> = forms
            .iter()
            .map(|f| {
                forms
                    .iter()
                    .map(|g| index[&compose_unchecked(f, g)] as u32)
                    .collect()
            })
            .collect();
        let identity = index[&FormClass::principal(disc)];
        let mut cg = ClassGroupTable {
            modulus,
            forms,
            index,
            table,
            identity,
            structure: Vec::new(),
            two_torsion: Vec::new(),
            squares: Vec::new(),
            pillars: Vec::new(),
            quotient_coords: HashMap::new(),
            config: config.clone(),
        };
        let all: Vec<usize> = (0..cg.forms.len()).collect();
        cg.structure = cg
            .decompose_group(&all, config.decomposition, |_| {
                Box::new((0..cg.forms.len()).map(|i| Ok((i, i))))
            })?
            .into_iter()
            .map(|(_, g, h)| (g, h))
            .collect();
        cg.two_torsion = all
            .iter()
            .copied()
            .filter(|&x| cg.mul(x, x) == identity)
            .collect();
        let squares: BTreeSet<usize> = all.iter().map(|&x| cg.mul(x, x)).collect();
        cg.squares = squares.into_iter().collect();
        cg.setup_quotient(config)?;
        Ok(cg)
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn config(&self) -> &QuotientConfig {
        &self.config
    }

    pub fn class_number(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[FormClass] {
        &self.forms
    }

    pub fn identity(&self) -> FormClass {
        self.forms[self.identity]
    }

    pub fn structure(&self) -> Vec<(FormClass, u64)> {
        self.structure
            .iter()
            .map(|&(g, h)| (self.forms[g], h))
            .collect()
    }

    pub fn structure_orders(&self) -> Vec<u64> {
        self.structure.iter().map(|&(_, h)| h).collect()
    }

    /// The 2-torsion subgroup `E`.
    pub fn two_torsion(&self) -> Vec<FormClass> {
        self.two_torsion.iter().map(|&i| self.forms[i]).collect()
    }

    pub fn quotient_order(&self) -> usize {
        self.squares.len()
    }

    pub fn pillars(&self) -> &[Pillar] {
        &self.pillars
    }

    pub fn pillar_index(&self, p: u64) -> Option<usize> {
        self.pillars.iter().position(|pl| pl.p() == p)
    }

    pub fn quotient_orders(&self) -> Vec<u64> {
        self.pillars.iter().map(|p| p.h).collect()
    }

    pub(crate) fn idx(&self, f: &FormClass) -> usize {
        self.index[f]
    }

    pub(crate) fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x][y] as usize
    }

    pub(crate) fn pow(&self, x: usize, k: u64) -> usize {
        let mut acc = self.identity;
        for _ in 0..k {
            acc = self.mul(acc, x);
        }
        acc
    }

    pub(crate) fn identity_idx(&self) -> usize {
        self.identity
    }

    pub fn compose(&self, f: &FormClass, g: &FormClass) -> Result<FormClass> {
        let (i, j) = (self.lookup(f)?, self.lookup(g)?);
        Ok(self.forms[self.mul(i, j)])
    }

    fn lookup(&self, f: &FormClass) -> Result<usize> {
        self.index
            .get(f)
            .copied()
            .ok_or(Error::DiscriminantMismatch {
                expected: self.modulus.disc(),
                found: f.disc(),
            })
    }

    pub fn order_of(&self, f: &FormClass) -> Result<u64> {
        Ok(self.order(self.lookup(f)?))
    }

    pub(crate) fn order(&self, x: usize) -> u64 {
        let mut k = 1;
        let mut y = x;
        while y != self.identity {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    pub fn in_two_torsion(&self, f: &FormClass) -> Result<bool> {
        let i = self.lookup(f)?;
        Ok(self.mul(i, i) == self.identity)
    }

    /// Smallest `k >= 1` with `x^k` in the subgroup `h`.
    fn order_modulo(&self, x: usize, h: &HashSet<usize>) -> u64 {
        let mut k = 1;
        let mut y = x;
        while !h.contains(&y) {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    fn extend_subgroup(&self, h: &HashSet<usize>, y: usize) -> HashSet<usize> {
        let mut out = HashSet::new();
        let mut power = self.identity;
        loop {
            for &z in h {
                out.insert(self.mul(z, power));
            }
            power = self.mul(power, y);
            if power == self.identity {
                break;
            }
        }
        out
    }

    /// Greedy maximal-order peeling inside the subgroup `target`.
    ///
    /// Each round takes the first candidate whose order equals the exponent of
    /// `target / H` and whose cyclic group meets the already chosen `H` trivially.
    #[allow(clippy::type_complexity, clippy::needless_lifetimes)]
    fn decompose_group<'a, K: Copy>(
        &'a self,
        target: &[usize],
        mode: CyclicDecomposition,
        candidates: impl Fn(u64) -> Box<dyn Iterator<Item = Result<(K, usize)>> + 'a>,
    ) -> Result<Vec<(K, usize, u64)>> {
        let parts: Vec<Vec<usize>> = match mode {
            CyclicDecomposition::InvariantFactors => vec![target.to_vec()],
            CyclicDecomposition::Primary => {
                let n = target.len() as u64;
                num_prime::nt_funcs::factorize64(n)
                    .keys()
                    .map(|&l| {
                        target
                            .iter()
                            .copied()
                            .filter(|&x| is_power_of(self.order(x), l))
                            .collect()
                    })
                    .collect()
            }
        };
        let mut out = Vec::new();
        for part in parts {
            let members: HashSet<usize> = part.iter().copied().collect();
            let mut h: HashSet<usize> = [self.identity].into_iter().collect();
            while h.len() < members.len() {
                let exponent = part
                    .iter()
                    .map(|&x| self.order_modulo(x, &h))
                    .max()
                    .unwrap_or(1);
                let mut chosen = None;
                for cand in candidates(exponent) {
                    let (key, y) = cand?;
                    if members.contains(&y)
                        && self.order(y) == exponent
                        && self.order_modulo(y, &h) == exponent
                    {
                        chosen = Some((key, y));
                        break;
                    }
                }
                let (key, y) = chosen.ok_or_else(|| {
                    Error::InvalidPillars(format!("no generator of order {exponent} found"))
                })?;
                h = self.extend_subgroup(&h, y);
                out.push((key, y, exponent));
            }
        }
        Ok(out)
    }

    fn setup_quotient(&mut self, config: &QuotientConfig) -> Result<()> {
        let quotient_order = self.squares.len() as u64;
        let chosen: Vec<(PrimeIdeal, usize, u64)> = match &config.pillars {
            Some(ideals) => {
                let mut out = Vec::new();
                for ideal in ideals {
                    if !is_prime(ideal.p) || kronecker(&self.modulus, ideal.p) != 1 {
                        return Err(Error::InvalidPillars(format!(
                            "{} is not a split prime",
                            ideal.p
                        )));
                    }
                    let c = self.class_of_ideal(*ideal)?;
                    let y = self.mul(c, c);
                    out.push((*ideal, y, self.order(y)));
                }
                let mut h: HashSet<usize> = [self.identity].into_iter().collect();
                for &(_, y, _) in &out {
                    h = self.extend_subgroup(&h, y);
                }
                let product: u64 = out.iter().map(|o| o.2).product();
                if product != quotient_order || h.len() as u64 != quotient_order {
                    return Err(Error::InvalidPillars(format!(
                        "orders {:?} do not give a direct sum decomposition of Cl(K)/E of order {}",
                        out.iter().map(|o| o.2).collect::<Vec<_>>(),
                        quotient_order
                    )));
                }
                out
            }
            None => {
                let squares = self.squares.clone();
                let modulus = self.modulus;
                self.decompose_group(&squares, config.decomposition, |_| {
                    let this = &*self;
                    Box::new(
                        (2..PILLAR_SEARCH_LIMIT)
                            .filter(|&p| is_prime(p) && kronecker(&modulus, p) == 1)
                            .map(move |p| {
                                let ideal = PrimeIdeal::lifted(p);
                                let c = this.class_of_ideal(ideal)?;
                                Ok((ideal, this.mul(c, c)))
                            }),
                    )
                })?
            }
        };
        self.pillars = chosen
            .iter()
            .map(|&(ideal, _, h)| {
                let root = splitting_type(&self.modulus, ideal.p).root.unwrap_or(0);
                let root = if ideal.conj && ideal.p != 2 {
                    ideal.p - root
                } else {
                    root
                };
                Ok(Pillar {
                    ideal,
                    root,
                    h,
                    class: self.forms[self.class_of_ideal(ideal)?],
                })
            })
            .collect::<Result<_>>()?;
        // coordinates of every square with respect to the pillar images
        let gens: Vec<(usize, u64)> = chosen.iter().map(|&(_, y, h)| (y, h)).collect();
        let mut coords = HashMap::new();
        let mut vec = vec![0u64; gens.len()];
        loop {
            let mut x = self.identity;
            for (j, &(y, _)) in gens.iter().enumerate() {
                x = self.mul(x, self.pow(y, vec[j]));
            }
            coords.insert(x, vec.clone());
            // odometer increment
            let mut j = 0;
            while j < gens.len() {
                vec[j] += 1;
                if vec[j] < gens[j].1 {
                    break;
                }
                vec[j] = 0;
                j += 1;
            }
            if j == gens.len() {
                break;
            }
        }
        self.quotient_coords = coords;
        Ok(())
    }

    /// Index of the class of a split or ramified prime ideal.
    pub(crate) fn class_of_ideal(&self, ideal: PrimeIdeal) -> Result<usize> {
        Ok(self.idx(&ideal_form(&self.modulus, ideal)?))
    }

    /// `f(p)`: the class of the lifted ideal `l(p)`.
    pub fn class_of_prime(&self, p: u64) -> Result<PrimeClass> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if splitting_type(&self.modulus, p).kind == SplitKind::Inert {
            return Ok(PrimeClass {
                form: self.identity(),
                inert: true,
            });
        }
        Ok(PrimeClass {
            form: self.forms[self.class_of_ideal(PrimeIdeal::lifted(p))?],
            inert: false,
        })
    }

    /// Coordinates in `Cl(K)/E` of the class of an arbitrary form.
    pub fn quotient_class(&self, f: &FormClass) -> Result<QuotientClass> {
        let i = self.lookup(f)?;
        Ok(QuotientClass(self.quotient_coords[&self.mul(i, i)].clone()))
    }

    /// `g(p)`: the image of `f(p)` in `Cl(K)/E`.
    pub fn class_mod_e(&self, p: u64) -> Result<QuotientClass> {
        let c = self.class_of_prime(p)?;
        self.quotient_class(&c.form)
    }
}

fn is_power_of(mut n: u64, l: u64) -> bool {
    while n.is_multiple_of(l) {
        n /= l;
    }
    n == 1
}

/// The reduced form attached to a split or ramified prime ideal.
///
/// The ideal `p Z + ((-B + sqrt(D))/2) Z` corresponds to `(p, B, (B^2 - D)/4p)`; `B` is
/// the unique value in `(-p, p]` with `B = D (mod 2)` placing `(-B + sqrt(D))/2` in the
/// ideal.
pub fn ideal_form(modulus: &Modulus, ideal: PrimeIdeal) -> Result<FormClass> {
    let p = ideal.p as i64;
    let disc = modulus.disc();
    let info = splitting_type(modulus, ideal.p);
    let r = match info.kind {
        SplitKind::Inert => return Err(Error::NotInL(ideal.p)),
        _ => info.root.unwrap_or(0) as i64,
    };
    let b = if ideal.p == 2 {
        if modulus.delta() == 0 {
            // <2, (1 + sqrt(-m))/2> <-> B = -1; conjugate <-> B = 1
            if ideal.conj {
                1
            } else {
                -1
            }
        } else {
            // ramified 2 over <2, r + sqrt(-m)>, B = -2r mod 4
            let b = (-2 * r).rem_euclid(4);
            if b > 2 {
                b - 4
            } else {
                b
            }
        }
    } else {
        let r = if ideal.conj { -r } else { r };
        let raw = if modulus.delta() == 1 {
            (-2 * r).rem_euclid(2 * p)
        } else {
            let b = (-r).rem_euclid(p);
            if b % 2 == 0 {
                b + p
            } else {
                b
            }
        };
        if raw > p {
            raw - 2 * p
        } else {
            raw
        }
    };
    let c = (b * b - disc) / (4 * p);
    reduce_form(disc, p, b, c)
}

/// `Cl(K)` for `m` with the default quotient configuration.
pub fn enumerate_class_group(modulus: Modulus) -> Result<ClassGroupTable> {
    ClassGroupTable::new(modulus, &QuotientConfig::default())
}
