//! Finite-shared-randomness local models for two-qubit entangled states.
//!
//! The crate has three layers:
//!
//! - a geometry layer ([`geometry`]) building polyhedral vertex sets on the
//!   Bloch sphere, their half-space profiles, inscribed radii and convex
//!   decompositions;
//! - an exact quantum reference layer ([`quantum`]) with small density
//!   matrices, Born statistics, entanglement certification and CHSH values;
//! - the simulation layer: local response protocols ([`protocols`]),
//!   local-polytope membership by linear programming ([`localpolytope`]),
//!   the quantitative landscape ([`analysis`]) and a seeded Monte Carlo
//!   harness plus CLI ([`harness`], [`cli`]).
//!
//! Start with the `examples/` directory; each example is a runnable tour of
//! one capability.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod protocols;
pub mod quantum;
pub mod localpolytope;
pub mod lp;

pub use error::{Error, Result};
