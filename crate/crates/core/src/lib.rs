//! Period statistics of iterated functions on a finite set.
//!
//! For a mapping `f: [n] -> [n]` the crate computes the eventual period
//! `T(f)` (the lcm of the cycle lengths), the cycle-length product `B(f)`
//! and the number of distinct iterates `O(f)`, together with their
//! expectations under the uniform measure:
//!
//! * [`fungraph`]: functional-graph decomposition of a single mapping.
//! * [`exact`]: exact rational ground truth (enumeration, partition sums).
//! * [`renyi`]: connected-mapping counts and the series coefficients `c_d`.
//! * [`series`]: power-series machinery, the exact `E_n(B)` identity and
//!   the saddle-point analysis of `mu(n)`.
//! * [`asymptotics`]: the constants `I`, `beta0`, `k0` and the estimates
//!   for `E_n(T)`.
//! * [`montecarlo`]: reproducible sampling of uniform random mappings.
//!
//! Numerical kernels are generic over [`num_traits::Float`]; exact
//! arithmetic uses [`Rational`].

pub mod asymptotics;
pub mod error;
pub mod exact;
pub mod fungraph;
pub mod montecarlo;
pub mod quadrature;
pub mod renyi;
pub mod scalar;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use scalar::{Coefficient, ExactScalar};

/// Working floating type for tables and reports.
pub type Real = f64;
/// Exact rational type.
pub type Rational = num_rational::BigRational;
/// Arbitrary precision natural numbers (periods, products, counts).
pub type Natural = num_bigint::BigUint;
