//! Boundary-layer energy densities of the Landau-de Gennes model with a symmetry-breaking
//! field: one-dimensional transition profiles, their closed forms and reduced descriptions,
//! sphere integrals, and explicit recovery constructions around a spherical particle.

// `!(x > 0.0)` style comparisons are deliberate: they reject NaN along with the failing range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform_inf;
pub mod error;
pub mod geodesic;
pub mod lambda;
pub mod numerics;
pub mod parallel;
pub mod profile1d;
pub mod qtensor;
pub mod recovery;
pub mod sphere;

pub use error::{Error, Result};
pub use lambda::Lambda;
pub use qtensor::{Director, PotentialParams, S0Tensor};

/// Version tag written into every JSON and CSV header.
pub const SCHEMA_VERSION: u32 = 1;
