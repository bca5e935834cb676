//! Arithmetic in the imaginary quadratic field `Q(sqrt(-m))` and its ring of integers.
//!
//! The ring of integers is `Z[w]` with `w = sqrt(-m)` when `-m = 2, 3 (mod 4)` and
//! `w = (1 + sqrt(-m))/2` when `-m = 1 (mod 4)`. Elements are stored as
//! `(u + v*sqrt(-m)) / 2^half` with integer coordinates, so nothing here ever touches
//! a rational number.
//!
//! Prime ideals over split primes are identified by the residue `t` of `w` modulo the
//! ideal: `O_K / P^j = Z / p^j` with `w -> t_j`. The chosen lifting of `p` is
//! `<p, r + sqrt(-m)>` where `r` is the smaller square root of `-m` modulo `p`
//! (and `<2, (1 + sqrt(-m))/2>` over 2); the conjugate ideal uses `p - r`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A square-free `m > 3` together with the invariants of `K = Q(sqrt(-m))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Modulus {
    m: u64,
    delta: u8,
    disc: i64,
}

impl Modulus {
    pub fn new(m: u64) -> Result<Self> {
        if m <= 3 {
            return Err(Error::ModulusTooSmall(m));
        }
        if !num_prime::nt_funcs::is_square_free(&m) {
            return Err(Error::NotSquareFree(m));
        }
        // -m = 1 (mod 4) <=> m = 3 (mod 4)
        let (delta, disc) = if m % 4 == 3 {
            (0, -(m as i64))
        } else {
            (1, -4 * m as i64)
        };
        Ok(Modulus { m, delta, disc })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// 0 when `-m = 1 (mod 4)`, else 1.
    pub fn delta(&self) -> u8 {
        self.delta
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    /// Whether the ring of integers contains half-integral elements.
    pub fn has_half_integers(&self) -> bool {
        self.delta == 0
    }

    /// `2^(1 - delta)`, the denominator of a generic element of `O_K`.
    pub fn denominator(&self) -> u64 {
        if self.delta == 0 {
            2
        } else {
            1
        }
    }

    /// Trace and norm of `w`, so that `w^2 - trace*w + norm = 0`.
    fn omega_poly(&self) -> (i64, i64) {
        if self.delta == 0 {
            (1, (1 + self.m as i64) / 4)
        } else {
            (0, self.m as i64)
        }
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.m)
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// `-m mod p` as a value in `[0, p)`.
fn neg_m_mod(m: u64, p: u64) -> u64 {
    (p - m % p) % p
}

/// Kronecker symbol `(-m / p)` for a prime `p`.
///
/// For `p = 2` this is 0 when 2 divides the discriminant, 1 when `-m = 1 (mod 8)` and
/// -1 otherwise.
pub fn kronecker(modulus: &Modulus, p: u64) -> i8 {
    let m = modulus.m;
    if p == 2 {
        if modulus.disc % 2 == 0 {
            0
        } else if (8 - m % 8) % 8 == 1 {
            1
        } else {
            -1
        }
    } else if m.is_multiple_of(p) {
        0
    } else {
        let a = neg_m_mod(m, p);
        if pow_mod(a, (p - 1) / 2, p) == 1 {
            1
        } else {
            -1
        }
    }
}

/// Square root of `a` modulo an odd prime `p` (Tonelli-Shanks).
///
/// Returns the root in `[0, (p-1)/2]`; `Some(0)` when `p | a` and `None` for a non-residue.
pub fn sqrt_mod(a: i64, p: u64) -> Option<u64> {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r.min(p - r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitKind {
    Split,
    Inert,
    Ramified,
}

/// How a rational prime decomposes in `O_K`, with the root that fixes the lifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeSplitInfo {
    pub p: u64,
    pub kind: SplitKind,
    /// Canonical `r` with `r^2 = -m (mod p)`. For `p = 2` this is `m mod 2`, which for a
    /// split 2 corresponds to the ideal `<2, (1 + sqrt(-m))/2>`.
    pub root: Option<u64>,
}

pub fn splitting_type(modulus: &Modulus, p: u64) -> PrimeSplitInfo {
    let kind = match kronecker(modulus, p) {
        1 => SplitKind::Split,
        0 => SplitKind::Ramified,
        _ => SplitKind::Inert,
    };
    let root = match (kind, p) {
        (SplitKind::Inert, _) => None,
        (_, 2) => Some(modulus.m % 2),
        _ => sqrt_mod(-(modulus.m as i64), p),
    };
    PrimeSplitInfo { p, kind, root }
}

/// A prime ideal over a split rational prime: the lifting `l(p)` or its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub p: u64,
    pub conj: bool,
}

impl PrimeIdeal {
    pub fn lifted(p: u64) -> Self {
        PrimeIdeal { p, conj: false }
    }

    pub fn conjugate(self) -> Self {
        PrimeIdeal {
            p: self.p,
            conj: !self.conj,
        }
    }

    /// Residue of `w` modulo this ideal, in `[0, p)`.
    pub fn omega_residue(&self, modulus: &Modulus) -> Result<u64> {
        let info = splitting_type(modulus, self.p);
        if info.kind != SplitKind::Split {
            return Err(Error::NotInL(self.p));
        }
        let p = self.p;
        let t = if p == 2 {
            // <2, w> for the lifting, <2, w - 1> for its conjugate
            u64::from(self.conj)
        } else {
            let r = info.root.expect("split odd prime has a root");
            // sqrt(-m) = -r modulo l(p), +r modulo its conjugate
            let s = if self.conj { r } else { (p - r) % p };
            if modulus.delta == 1 {
                s
            } else {
                let inv2 = p.div_ceil(2);
                mul_mod((1 + s) % p, inv2, p)
            }
        };
        Ok(t)
    }

    /// Residue of `w` modulo `P^k`, Hensel-lifted from [`Self::omega_residue`].
    pub fn omega_residue_lifted(&self, modulus: &Modulus, k: u32) -> Result<BigInt> {
        let p = self.p;
        let t0 = self.omega_residue(modulus)?;
        let (tr, nm) = modulus.omega_poly();
        let f = |x: &BigInt| x * x - BigInt::from(tr) * x + BigInt::from(nm);
        // f'(t0) is a unit mod p because p does not divide the discriminant
        let deriv = ((2 * t0 as i64 - tr).rem_euclid(p as i64)) as u64;
        let inv = pow_mod(deriv, p - 2, p);
        let inv = if p == 2 { 1 } else { inv };
        let pb = BigInt::from(p);
        let mut t = BigInt::from(t0);
        let mut pj = pb.clone();
        for _ in 1..k.max(1) {
            let q = f(&t) / &pj;
            let corr = (-q * BigInt::from(inv)).mod_floor(&pb);
            t += corr * &pj;
            pj *= &pb;
        }
        Ok(t)
    }

    /// `v_P(z)` for a nonzero element `z`.
    pub fn valuation(&self, modulus: &Modulus, z: &QuadInt) -> Result<u32> {
        let p = BigInt::from(self.p);
        let mut norm = z.norm(modulus);
        if norm.is_zero() {
            return Err(Error::Parse("valuation of zero".into()));
        }
        let mut k = 0u32;
        while (&norm % &p).is_zero() {
            norm /= &p;
            k += 1;
        }
        if k == 0 {
            return Ok(0);
        }
        let t = self.omega_residue_lifted(modulus, k)?;
        let (x, y) = z.omega_coords(modulus);
        let mut r = x + y * t;
        let mut j = 0;
        while j < k && !r.is_zero() && (&r % &p).is_zero() {
            r /= &p;
            j += 1;
        }
        if r.is_zero() {
            j = k;
        }
        Ok(j)
    }
}

impl std::fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.conj {
            write!(f, "P{}'", self.p)
        } else {
            write!(f, "P{}", self.p)
        }
    }
}

/// An element `(u + v*sqrt(-m)) / 2^half` of `O_K`.
///
/// The representation is canonical: `half` is set only when `u` and `v` are both odd.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub u: BigInt,
    pub v: BigInt,
    pub half: bool,
}

impl QuadInt {
    pub fn new(modulus: &Modulus, u: BigInt, v: BigInt, half: bool) -> Result<Self> {
        if half {
            if !modulus.has_half_integers() || u.is_odd() != v.is_odd() {
                return Err(Error::Parity {
                    u: u.to_string(),
                    v: v.to_string(),
                });
            }
            if u.is_even() {
                return Ok(QuadInt {
                    u: u / 2,
                    v: v / 2,
                    half: false,
                });
            }
        }
        Ok(QuadInt { u, v, half })
    }

    pub fn integer(u: impl Into<BigInt>, v: impl Into<BigInt>) -> Self {
        QuadInt {
            u: u.into(),
            v: v.into(),
            half: false,
        }
    }

    pub fn one() -> Self {
        QuadInt::integer(1, 0)
    }

    pub fn conj(&self) -> Self {
        QuadInt {
            u: self.u.clone(),
            v: -&self.v,
            half: self.half,
        }
    }

    pub fn norm(&self, modulus: &Modulus) -> BigInt {
        let n = &self.u * &self.u + BigInt::from(modulus.m) * &self.v * &self.v;
        if self.half {
            n / 4
        } else {
            n
        }
    }

    pub fn mul(&self, modulus: &Modulus, other: &QuadInt) -> Result<QuadInt> {
        let m = BigInt::from(modulus.m);
        let u = &self.u * &other.u - &m * &self.v * &other.v;
        let v = &self.u * &other.v + &other.u * &self.v;
        match (self.half, other.half) {
            (false, false) => Ok(QuadInt { u, v, half: false }),
            (true, true) => QuadInt::new(modulus, u / 2, v / 2, true),
            _ => QuadInt::new(modulus, u, v, true),
        }
    }

    /// Coordinates `(x, y)` with `self = x + y*w`.
    pub fn omega_coords(&self, modulus: &Modulus) -> (BigInt, BigInt) {
        if modulus.delta == 1 {
            (self.u.clone(), self.v.clone())
        } else if self.half {
            ((&self.u - &self.v) / 2, self.v.clone())
        } else {
            (&self.u - &self.v, &self.v * 2)
        }
    }

    /// Largest rational integer dividing the element in `O_K`.
    pub fn content(&self, modulus: &Modulus) -> BigInt {
        let (x, y) = self.omega_coords(modulus);
        x.gcd(&y).abs()
    }
}

pub fn qi_mul(modulus: &Modulus, x: &QuadInt, y: &QuadInt) -> Result<QuadInt> {
    x.mul(modulus, y)
}

pub fn qi_conj(x: &QuadInt) -> QuadInt {
    x.conj()
}

pub fn qi_norm(modulus: &Modulus, x: &QuadInt) -> BigInt {
    x.norm(modulus)
}

/// Primes up to `bound`, ascending.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    num_prime::nt_funcs::primes(bound)
        .into_iter()
        .filter(|&p| p <= bound)
        .collect()
}

pub fn is_prime(p: u64) -> bool {
    num_prime::nt_funcs::is_prime64(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(m: u64) -> Modulus {
        Modulus::new(m).unwrap()
    }

    #[test]
    fn modulus_invariants() {
        assert_eq!(Modulus::new(12), Err(Error::NotSquareFree(12)));
        assert_eq!(Modulus::new(3), Err(Error::ModulusTooSmall(3)));
        let m = md(23);
        assert_eq!((m.delta(), m.disc()), (0, -23));
        let m = md(974);
        assert_eq!((m.delta(), m.disc()), (1, -3896));
        let m = md(35);
        assert_eq!((m.delta(), m.disc()), (0, -35));
        for m in [5u64, 6, 7, 10, 11, 13, 14, 15, 17, 19, 21, 22] {
            let d = md(m).disc();
            assert!(d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1);
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(&md(35), 71), 1);
        assert_eq!(kronecker(&md(35), 5), 0);
        assert_eq!(kronecker(&md(23), 2), 1);
        assert_eq!(kronecker(&md(23), 5), -1);
        assert_eq!(kronecker(&md(974), 2), 0);
        // -m = 5 (mod 8)
        assert_eq!(kronecker(&md(11), 2), -1);
    }

    #[test]
    fn kronecker_matches_brute_force_residues() {
        for m in [23u64, 35, 974, 5, 6, 7] {
            let md = md(m);
            for p in primes_up_to(200).into_iter().filter(|&p| p > 2) {
                let a = neg_m_mod(m, p);
                let residue = (1..p).any(|x| x * x % p == a);
                let expected = if a == 0 {
                    0
                } else if residue {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(&md, p), expected, "m={m} p={p}");
            }
        }
    }

    #[test]
    fn sqrt_mod_examples() {
        assert_eq!(sqrt_mod(10, 41), Some(16));
        assert_eq!(sqrt_mod(-974, 41), Some(16));
        assert_eq!(sqrt_mod(0, 7), Some(0));
        assert_eq!(sqrt_mod(1, 3), Some(1));
        assert_eq!(sqrt_mod(3, 7), None);
        // p = 1 (mod 8) exercises the Tonelli-Shanks loop
        for a in 1..17 {
            if let Some(r) = sqrt_mod(a, 17) {
                assert_eq!(r * r % 17, a as u64);
                assert!(r <= 8);
            }
        }
    }

    #[test]
    fn splitting_examples() {
        let s = splitting_type(&md(974), 41);
        assert_eq!((s.kind, s.root), (SplitKind::Split, Some(16)));
        let s = splitting_type(&md(974), 5);
        assert_eq!((s.kind, s.root), (SplitKind::Split, Some(1)));
        assert_eq!(splitting_type(&md(35), 5).kind, SplitKind::Ramified);
        assert_eq!(splitting_type(&md(23), 5).kind, SplitKind::Inert);
        assert_eq!(splitting_type(&md(23), 2).kind, SplitKind::Split);
        assert_eq!(splitting_type(&md(974), 2).kind, SplitKind::Ramified);
    }

    #[test]
    fn quadint_examples() {
        let m7 = md(7);
        let x = QuadInt::new(&m7, (-3).into(), 1.into(), true).unwrap();
        assert_eq!(x.norm(&m7), 4.into());
        let m = md(974);
        let a = QuadInt::integer(1, 1);
        let prod = a.mul(&m, &a.conj()).unwrap();
        assert_eq!(prod, QuadInt::integer(975, 0));
        assert_eq!(QuadInt::integer(6, 1).norm(&md(23)), 59.into());
        assert!(QuadInt::new(&m, 1.into(), 1.into(), true).is_err());
        assert!(QuadInt::new(&m7, 1.into(), 2.into(), true).is_err());
    }

    #[test]
    fn omega_residues_are_roots() {
        for m in [23u64, 35, 974, 7, 15] {
            let md = md(m);
            let (tr, nm) = md.omega_poly();
            for p in primes_up_to(100) {
                if kronecker(&md, p) != 1 {
                    continue;
                }
                for conj in [false, true] {
                    let ideal = PrimeIdeal { p, conj };
                    for k in 1..5 {
                        let t = ideal.omega_residue_lifted(&md, k).unwrap();
                        let f = &t * &t - BigInt::from(tr) * &t + BigInt::from(nm);
                        assert!((f % BigInt::from(p).pow(k)).is_zero(), "m={m} p={p} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn valuations_of_known_generators() {
        // <615, 16 + sqrt(-974)>^2 = <359 - 16 sqrt(-974)>, and 615 = 3 * 5 * 41
        let m = md(974);
        let z = QuadInt::integer(359, -16);
        for p in [3u64, 5, 41] {
            assert_eq!(PrimeIdeal::lifted(p).valuation(&m, &z).unwrap(), 2);
            assert_eq!(
                PrimeIdeal::lifted(p).conjugate().valuation(&m, &z).unwrap(),
                0
            );
        }
        // P^2 = <(-3 + sqrt(-7))/2> for P over 2
        let m7 = md(7);
        let z = QuadInt::new(&m7, (-3).into(), 1.into(), true).unwrap();
        assert_eq!(PrimeIdeal::lifted(2).valuation(&m7, &z).unwrap(), 2);
        assert_eq!(
            PrimeIdeal::lifted(2)
                .conjugate()
                .valuation(&m7, &z)
                .unwrap(),
            0
        );
        // rational 3 = P3 * P3'
        let z = QuadInt::integer(3, 0);
        assert_eq!(PrimeIdeal::lifted(3).valuation(&m, &z).unwrap(), 1);
        assert_eq!(
            PrimeIdeal::lifted(3).conjugate().valuation(&m, &z).unwrap(),
            1
        );
    }
}
