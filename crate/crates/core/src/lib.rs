//! Discretized incidence geometry at dyadic scales.
//!
//! Everything here lives on the dyadic grid: point sets are finite families
//! of half-open dyadic squares at a base scale `δ = 2^-m`, tubes are the
//! point sets of lines `y = ax + b` with `(a,b)` ranging over a dyadic
//! parameter square, and all counting (covering numbers, incidences,
//! branching profiles) is exact integer arithmetic. Floating point only
//! enters where an exponent does (Frostman ratios, log-log fits) and is
//! kept out of every counting path.
//!
//! The crate is organized bottom-up:
//!
//! * [`dyadic`] — scales, exact dyadic rationals, squares, point sets.
//! * [`interval`] — the 1-D analog (slope sets, projections, sum/product sets).
//! * [`frostman`] — non-concentration certificates and ball counting.
//! * [`generators`] — Cantor iterates, random Frostman sets, discretized balls.
//! * [`tubes`] — dyadic tubes, incidence predicates, slope parametrization.
//! * [`incidence`] — nice configurations and the elementary incidence checkers.
//! * [`bundle`] — on-disk configuration bundles.
//! * [`multiscale`] — uniformization and branching profiles.
//! * [`refine`] — the induction-on-scales refinement and its multiscale form.
//! * [`decompose`] — multiscale Frostman-piece decompositions.
//! * [`classify`] — the structure-classification pipeline.
//! * [`experiments`] — batch experiments and report emission.

pub mod bundle;
pub mod corpus;
pub mod classify;
pub mod constants;
pub mod decompose;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod frostman;
pub mod generators;
pub mod incidence;
pub mod interval;
pub mod multiscale;
pub mod refine;
pub mod tubes;

pub use dyadic::{Domain, Dyadic, DyadicSquare, PointSet, Scale};
pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
