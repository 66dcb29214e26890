//! Band-limited localized Parseval frames on the circle, the flat 2-torus and
//! the 2-sphere.
//!
//! The crate builds metric lattices, exact positive-weight cubature on spaces
//! of band-limited functions, the needlet-type Parseval frame assembled from
//! them, and three computable Besov quasi-norms (frame coefficients, best
//! approximation, Littlewood–Paley pieces).

pub mod besov;
pub mod cubature;
pub mod error;
pub mod frames;
pub mod manifold;
pub mod report;
pub mod lattice;
pub mod spectral;

pub use error::{Error, Result};
