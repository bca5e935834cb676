//! The group of primitive almost Pythagorean triples `a^2 + m b^2 = c^2`.
//!
//! An element `[a, b, c]` is stored by its canonical representative: primitive, `c > 0`
//! and `a > 0`. Equality of group elements is equality of representatives.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    m: u64,
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl Triple {
    /// Canonical representative of the class of `(a, b, c)`.
    pub fn normalize(
        m: u64,
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
    ) -> Result<Triple> {
        let (mut a, mut b, mut c) = (a.into(), b.into(), c.into());
        let not_solution = |a: &BigInt, b: &BigInt, c: &BigInt| Error::NotASolution {
            m,
            a: a.to_string(),
            b: b.to_string(),
            c: c.to_string(),
        };
        if c.is_zero() || &a * &a + BigInt::from(m) * &b * &b != &c * &c {
            return Err(not_solution(&a, &b, &c));
        }
        if a.is_zero() {
            // m b^2 = c^2 has no solution with c != 0 for square-free m > 1
            return Err(not_solution(&a, &b, &c));
        }
        let g = a.gcd(&b).gcd(&c);
        a /= &g;
        b /= &g;
        c /= &g;
        c = c.abs();
        if a.is_negative() {
            a = -a;
            b = -b;
        }
        Ok(Triple { m, a, b, c })
    }

    pub fn identity(m: u64) -> Triple {
        Triple {
            m,
            a: BigInt::one(),
            b: BigInt::zero(),
            c: BigInt::one(),
        }
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn is_identity(&self) -> bool {
        self.b.is_zero()
    }

    /// `[a1 a2 - m b1 b2, a1 b2 + a2 b1, c1 c2]`, reduced.
    pub fn add(&self, other: &Triple) -> Result<Triple> {
        if self.m != other.m {
            return Err(Error::ModulusMismatch(self.m, other.m));
        }
        let m = BigInt::from(self.m);
        let a = &self.a * &other.a - m * &self.b * &other.b;
        let b = &self.a * &other.b + &other.a * &self.b;
        let c = &self.c * &other.c;
        Triple::normalize(self.m, a, b, c)
    }

    pub fn sub(&self, other: &Triple) -> Result<Triple> {
        self.add(&other.negate())
    }

    /// `[a, -b, c]`.
    pub fn negate(&self) -> Triple {
        Triple {
            m: self.m,
            a: self.a.clone(),
            b: -&self.b,
            c: self.c.clone(),
        }
    }

    /// `n * self` by double-and-add.
    pub fn scalar_mul(&self, n: i64) -> Triple {
        let mut base = if n < 0 { self.negate() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Triple::identity(self.m);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.add(&base).expect("same modulus");
            }
            base = base.add(&base).expect("same modulus");
            k >>= 1;
        }
        acc
    }

    /// The same triple with `|a|` and `|b|`, used for generators.
    pub fn with_positive_entries(&self) -> Triple {
        Triple {
            m: self.m,
            a: self.a.abs(),
            b: self.b.abs(),
            c: self.c.clone(),
        }
    }

    pub fn to_strings(&self) -> [String; 3] {
        [self.a.to_string(), self.b.to_string(), self.c.to_string()]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            [&self.a, &self.b, &self.c]
                .iter()
                .map(|x| bigint_json(x))
                .collect(),
        )
    }

    /// Parse `"a,b,c"` (brackets and spaces allowed) for modulus `m`.
    pub fn parse(m: u64, s: &str) -> Result<Triple> {
        let raw = RawTriple::from_str(s)?;
        Triple::normalize(m, raw.0, raw.1, raw.2)
    }

    pub fn from_json(m: u64, v: &serde_json::Value) -> Result<Triple> {
        let arr = v
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| Error::Parse(format!("expected [a, b, c], got {v}")))?;
        let parse = |x: &serde_json::Value| -> Result<BigInt> {
            match x {
                serde_json::Value::Number(n) => {
                    BigInt::from_str(&n.to_string()).map_err(|e| Error::Parse(e.to_string()))
                }
                serde_json::Value::String(s) => {
                    BigInt::from_str(s).map_err(|e| Error::Parse(e.to_string()))
                }
                _ => Err(Error::Parse(format!("not an integer: {x}"))),
            }
        };
        Triple::normalize(m, parse(&arr[0])?, parse(&arr[1])?, parse(&arr[2])?)
    }
}

/// Integers that fit in an `i64` become JSON numbers, larger ones decimal strings.
pub(crate) fn bigint_json(x: &BigInt) -> serde_json::Value {
    match i64::try_from(x) {
        Ok(v) => serde_json::Value::from(v),
        Err(_) => serde_json::Value::String(x.to_string()),
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

/// Three integers as typed by a user, before validation against a modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTriple(pub BigInt, pub BigInt, pub BigInt);

impl FromStr for RawTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected a,b,c, got {s:?}")));
        }
        let p = |x: &str| BigInt::from_str(x).map_err(|e| Error::Parse(format!("{x:?}: {e}")));
        Ok(RawTriple(p(parts[0])?, p(parts[1])?, p(parts[2])?))
    }
}

pub fn normalize(m: u64, a: i64, b: i64, c: i64) -> Result<Triple> {
    Triple::normalize(m, a, b, c)
}

pub fn add(t1: &Triple, t2: &Triple) -> Result<Triple> {
    t1.add(t2)
}

pub fn negate(t: &Triple) -> Triple {
    t.negate()
}

pub fn scalar_mul(n: i64, t: &Triple) -> Triple {
    t.scalar_mul(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(m: u64, a: i64, b: i64, c: i64) -> Triple {
        Triple::normalize(m, a, b, c).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(t(35, 2, 0, 2), Triple::identity(35));
        assert_eq!(t(7, -3, 1, 4).to_strings(), ["3", "-1", "4"]);
        assert_eq!(t(35, -34, 2, 36).to_strings(), ["17", "-1", "18"]);
        assert_eq!(t(35, -34, 2, -36).to_strings(), ["17", "-1", "18"]);
        let n = t(35, 17, -1, 18);
        assert_eq!(t(35, 17, -1, 18), n);
    }

    #[test]
    fn normalize_rejects_non_solutions() {
        assert!(matches!(
            Triple::normalize(35, 1, 1, 5),
            Err(Error::NotASolution { .. })
        ));
        assert!(Triple::normalize(35, 0, 0, 0).is_err());
        assert!(Triple::normalize(35, 0, 1, 6).is_err());
    }

    #[test]
    fn group_law_examples() {
        let x = t(974, 4141, 66, 4625);
        let y = t(974, 14651, 174, 15625);
        assert_eq!(x.add(&y).unwrap(), t(974, 3167, 108, 4625));
        assert_eq!(x.add(&Triple::identity(974)).unwrap(), x);
        assert_eq!(x.add(&x.negate()).unwrap(), Triple::identity(974));
        assert!(matches!(
            x.add(&Triple::identity(35)),
            Err(Error::ModulusMismatch(974, 35))
        ));
    }

    #[test]
    fn negate_examples() {
        assert_eq!(t(23, 13, 12, 59).negate().to_strings(), ["13", "-12", "59"]);
        assert_eq!(Triple::identity(23).negate(), Triple::identity(23));
        let x = t(23, 13, 12, 59);
        assert_eq!(x.negate().negate(), x);
    }

    #[test]
    fn scalar_mul_examples() {
        // 2*[1,1,6] = [1 - 35, 2, 36] = [-34, 2, 36]
        assert_eq!(t(35, 1, 1, 6).scalar_mul(2), t(35, 17, -1, 18));
        assert_eq!(t(35, 1, 1, 6).scalar_mul(0), Triple::identity(35));
        // 2*[3,1,4] = [9 - 7, 6, 16] = [1, 3, 8]
        assert_eq!(t(7, 3, 1, 4).scalar_mul(2), t(7, 1, 3, 8));
        let x = t(23, 13, 12, 59);
        let mut acc = Triple::identity(23);
        for n in 0..8 {
            assert_eq!(x.scalar_mul(n), acc);
            assert_eq!(x.scalar_mul(-n), acc.negate());
            acc = acc.add(&x).unwrap();
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(Triple::parse(23, "13,12,59").unwrap(), t(23, 13, 12, 59));
        assert_eq!(
            Triple::parse(23, "[13, -12, 59]").unwrap(),
            t(23, 13, -12, 59)
        );
        assert!(Triple::parse(23, "13,12").is_err());
        let j = serde_json::json!([13, 12, 59]);
        assert_eq!(Triple::from_json(23, &j).unwrap(), t(23, 13, 12, 59));
        assert_eq!(t(23, 13, 12, 59).to_json(), j);
        assert_eq!(t(23, 13, 12, 59).to_string(), "[13,12,59]");
    }
}
