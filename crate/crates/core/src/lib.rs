//! Controlled homological algebra over CAT(0) model spaces.
//!
//! The crate builds based free resolutions over group rings, equips them
//! with control maps into Euclidean, tree or product model spaces, and
//! decides membership questions about boundary directions by producing
//! re-checkable certificates: finitary chain maps with positive guaranteed
//! shift on one side, truncated Novikov homology obstructions on the other,
//! and controlled-acyclicity lag estimates in between.
//!
//! Everything is exact. Coefficients are generic over [`scalar::Scalar`]
//! (arbitrary-precision integers or rationals, or a prime field `Gf<P>`);
//! geometry uses rationals and exact square-root comparisons.

pub mod scalar;
pub mod group;
pub mod groupring;
pub mod complex;
pub mod solve;
pub mod geometry;
pub mod finitary;
pub mod sigma;
pub mod novikov;
pub mod certificate;

pub use scalar::{Field, Gf, Scalar};

/// Exact rationals, the default ground ring.
pub type Q = num_rational::BigRational;
/// Arbitrary-precision integers, for pure chain arithmetic.
pub type Z = num_bigint::BigInt;
/// The two-element field.
pub type Gf2 = Gf<2>;
/// The five-element field.
pub type Gf5 = Gf<5>;

/// Chains with the default rational coefficients.
pub type ChainQ = complex::Chain<Q>;
/// Complexes with the default rational coefficients.
pub type ComplexQ = complex::ChainComplex<Q>;
/// Finitary maps with the default rational coefficients.
pub type FinitaryMapQ = finitary::FinitaryMap<Q>;
