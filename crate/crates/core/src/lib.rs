//! Finite-dimensional cavity-QED model of neutral hydrogen association and
//! dissociation.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`] enumerates the second-quantized configurations (five photon
//!   modes, eight electron orbital slots, one nuclear bit) and prunes them to
//!   the subspace reachable from a set of seed states.
//! * [`ops`] builds the primitive sparse operators (photon ladders, orbital
//!   transitions, spin flips, nuclear tunnelling) and their algebra.
//! * [`model`] assembles the four-part Hamiltonian and the classical
//!   coupling schedules.
//! * [`ptsim`] computes matrix exponentials by increment-accumulating
//!   doubling of a 4-term Taylor seed.
//! * [`dynamics`] holds the Lindblad superoperators, the two-step
//!   (unitary + explicit dissipative) integrator and thermal utilities, plus a
//!   symmetry-sector engine used for long runs.
//! * [`analysis`] computes named-state populations, dark states and
//!   density-matrix diagnostics.
//! * [`scenario`] and [`runner`] define the reproducible scenario format, CSV
//!   export and the `run` / `validate` / `sweep` verbs used by the CLI.

extern crate blas_src;

pub mod analysis;
pub mod basis;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod model;
pub mod ops;
pub mod ptsim;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};

/// Version string written into run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
