//! Exact decision procedures for pseudo-orbit shadowing on finite metric
//! dynamical systems.
//!
//! The crate represents a compact metric space at desk scale: finitely many
//! labelled points with exact rational pairwise distances, self-maps of the
//! point set, and eventually periodic sequences of such maps. On top of that
//! it decides the (ε,δ)-shadowing predicate exactly, constructs nearby
//! systems realizing pseudo-orbits as genuine orbits, and cross-validates the
//! equivalences between shadowing, the structural neighborhood property,
//! functionally/continuously generated pseudo-orbit tracing, and upper
//! Hausdorff semicontinuity of the orbit map as machine-checkable
//! inequalities between moduli.
//!
//! Modules:
//! - [`space`], [`system`]: spaces, maps, map sequences, the sup metric, orbits.
//! - [`pseudo`]: δ-pseudo-orbits, survivor sets, the shadowing decision
//!   procedure, its brute-force oracle, and δ-threshold searches.
//! - [`construct`]: realization of pseudo-orbits by nearby systems, loop
//!   compression, and finite-support perturbations under a continuity class.
//! - [`analyze`]: the structural / FGPOTP / CGPOTP / semicontinuity checkers,
//!   modulus tables, and the equivalence experiment harness.
//! - [`doc`]: JSON/CSV document formats for systems, witnesses and reports.
//! - [`zoo`]: deterministic generators for named example systems.

pub mod analyze;
pub mod construct;
pub mod doc;
pub mod pseudo;
pub mod rational;
pub mod space;
pub mod system;
pub mod zoo;

pub use rational::Rat;
pub use space::{FiniteMetricSpace, MetricViolation, Norm, PointId, PointSet, SpaceError};
pub use system::{ContinuityClass, NonautonomousSystem, SystemError, SystemMap};
