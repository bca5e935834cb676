//! Arithmetic of the group of primitive almost Pythagorean triples `a^2 + m b^2 = c^2`:
//! the imaginary quadratic field `Q(sqrt(-m))`, its class group, an explicit free basis
//! of the triple group and decomposition of triples over that basis.

pub mod basis;
pub mod cache;
pub mod classgroup;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod quadfield;
pub mod triples;

pub use basis::{beta, enumerate_basis, Basis, BasisElement, Category, Generators};
pub use classgroup::{ClassGroupTable, FormClass, QuotientConfig};
pub use decompose::{decompose, recombine, Decomposition};
pub use error::{Error, Result};
pub use quadfield::{Modulus, PrimeIdeal, QuadInt};
pub use triples::Triple;
