//! Expectations of cylinder functions over affine slices of the sphere
//! `S^{N−1}(√N)`, and their Gaussian limits as `N → ∞`.

pub mod affine_model;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod numlin;
pub mod projections;
pub mod slice_geometry;
pub mod testfns;

pub use error::{Error, Result};
