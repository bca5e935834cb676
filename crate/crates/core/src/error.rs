use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("m = {0} must be greater than 3")]
    ModulusTooSmall(u64),
    #[error("m = {0} is not square-free")]
    NotSquareFree(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("form discriminant {found} does not match field discriminant {expected}")]
    DiscriminantMismatch { expected: i64, found: i64 },
    #[error("form ({0}, {1}, {2}) is not primitive positive definite")]
    BadForm(i64, i64, i64),
    #[error("half-integral element ({u} + {v}*sqrt(-m))/2 is not in the ring of integers")]
    Parity { u: String, v: String },
    #[error("({a}, {b}, {c}) is not a solution of x^2 + {m}*y^2 = z^2")]
    NotASolution {
        m: u64,
        a: String,
        b: String,
        c: String,
    },
    #[error("triples belong to different groups (m = {0} and m = {1})")]
    ModulusMismatch(u64, u64),
    #[error("prime {0} is not in L (its Kronecker symbol is not 1)")]
    NotInL(u64),
    #[error("prime {0} lies in L0; its exponent vector is zero")]
    InL0(u64),
    #[error("prime {0} is a pillar prime")]
    IsPillar(u64),
    #[error("no generator of norm {0} matches the requested ideal; its class is not 2-torsion")]
    NoGenerator(String),
    #[error("2 ramifies, so a nonzero exponent over 2 is not allowed")]
    RamifiedTwo,
    #[error("ramified odd prime {0} is not supported in ideal products")]
    RamifiedFactor(u64),
    #[error("generator for prime {p} is beyond the bound {bound}")]
    BeyondBound { p: u64, bound: u64 },
    #[error("prime factor {0} does not fit in 64 bits")]
    FactorTooLarge(String),
    #[error("residual triple {0} with power-of-two third component is not the identity")]
    ResidualPowerOfTwo(String),
    #[error("elimination stalled at prime {0}")]
    Stalled(u64),
    #[error("invalid pillar configuration: {0}")]
    InvalidPillars(String),
    #[error("bound must be at least 2")]
    BoundTooSmall,
    #[error("recombination does not reproduce the input triple")]
    VerificationFailed,
    #[error("cache error: {0}")]
    Cache(String),
    #[error("parse error: {0}")]
    Parse(String),
}
