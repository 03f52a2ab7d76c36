//! Corona-code machinery for compact disc packings.
//!
//! A *corona* is a central disc together with a cyclic ring of petal discs,
//! each tangent to the center and to its cyclic neighbours. This crate works
//! with the combinatorial shadow of that picture: *coronal codes* (a center
//! symbol plus a cyclic petal word, up to rotation and reflection), the
//! *angle sums* they induce, and *realizers* that assign positive radii to
//! symbols. On top of those it provides
//!
//! - root finding for tight realizers (bisection for binary center-0 codes,
//!   damped multistart Newton with the analytic Jacobian in general),
//! - predicates and constructions on code sets (fundamentality, essentiality
//!   witnesses, the shrink operator, the bootstrap ratio inequality),
//! - exhaustive enumeration of canonical codes for small alphabets and the
//!   full candidate-radius table for two disc sizes,
//! - ingestion and verification of geometric packing patches, and
//! - SVG rendering of coronas and patches.
//!
//! Hot loops (multistart solving, subset searches, per-disc verification)
//! run on rayon when the `parallel` feature is enabled (the default) and
//! fall back to plain iterators otherwise; see [`par::Exec`].

pub mod cli;
pub mod codes;
pub mod enumerate;
pub mod geometry;
pub mod par;
pub mod realize;
pub mod render;
pub mod sets;
pub mod solver;

pub use codes::{AngleSum, CodeError, CoronalCode, Symbol};
pub use realize::{AngleSymbol, Realizer};
pub use sets::{CodeSet, EssentialWitness};
pub use solver::{SolveReport, SolverConfig, TightSystem};
