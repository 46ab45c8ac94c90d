//! Exact MacLane-style inductive valuations on Q[X] over p-adic bases.
//!
//! The crate provides the full computational chain: exact extended values,
//! dense rational polynomials with phi-adic expansion, finite-field towers
//! with factorization, first-stage and augmented valuations with graded
//! reduction to residual polynomials, key-polynomial construction, the
//! valuation-extension algorithm (all extensions of the p-adic valuation to
//! Q[X]/(g) with ramification and residue data), and separation certificates
//! for pairs of distinct inductive valuations.

pub mod approx;
pub mod basedvr;
pub mod finitefield;
pub mod inductive;
pub mod json;
pub mod poly;
pub mod propcheck;
pub mod scalar;
pub mod separate;

pub use approx::{
    approximate, extensions, newton_slopes, ApproxConfig, ApproxError, ApproxResult,
    ApproxStatus, ExtensionLeaf, NewtonSlope, ValuationOracle,
};
pub use basedvr::{BaseDVR, BaseError, ValuedBase};
pub use finitefield::{
    ff_factor, ff_is_irreducible, tower_extend, FFElem, FFPoly, FieldError, FieldTower,
};
pub use inductive::{InductiveValuation, Kind, Preceq, ResiduePoly, Stage, ValError};
pub use poly::{parse_poly, phi_expand, phi_recombine, PolyError, QPoly};
pub use scalar::{rat, rat_from_str, rat_int, rat_to_string, ExtValue, Rat, ScalarError};
pub use separate::{
    pairwise_report, separate, SeparateError, SeparationCertificate, WitnessDenominator,
};
