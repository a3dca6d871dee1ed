//! Locally differentially private frequency estimation.
//!
//! The crate implements the projective-geometry mechanism and its hybrid
//! block variant, the PI-RAPPOR mechanism with a fast dynamic-programming
//! decoder, public-coin variants that shrink per-user communication to one
//! field element, and randomized-response / subset-selection baselines.
//! A benchmark harness reproduces error and runtime comparisons between
//! them on synthetic workloads.

pub mod baselines;
pub mod error;
pub mod exact;
pub mod field;
pub mod harness;
pub mod hpg;
pub mod pg;
pub mod pirappor;
pub mod projgeom;
pub mod pubcoin;
pub mod seeding;

pub use error::{Error, Result};
pub use field::Field;
pub use pg::{CountVector, EstimateVector, PgParams};
pub use projgeom::{CanonicalVector, Geometry, PointIndex};
