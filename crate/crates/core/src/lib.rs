//! Adaptive wavelet Galerkin boundary element solver for the second-kind
//! double layer equation `(½I − K)u = g` on polyhedral surfaces made of flat
//! parallelogram patches.

pub mod analysis;
pub mod basis;
pub mod discretize;
pub mod error;
pub mod solver;
pub mod surface;

pub use error::{Error, Result};
