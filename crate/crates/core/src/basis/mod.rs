//! Orthonormal piecewise-constant Haar wavelets on the patches of a surface.
//!
//! Each patch carries one scaling function (level -1) and, for every level
//! `j ≥ 0`, wavelets of three kinds on the `4^j` dyadic squares of its
//! parameter domain. All functions are `L2(∂Ω)`-normalized.

mod coeffs;
mod index;
mod norms;
mod transform;
mod tree;

pub use coeffs::CoeffVector;
pub use index::{Cell, Kind, WaveletIndex};
pub use norms::{best_n_term_curve, besov_norm, sobolev_seq_norm, BesovParams};
pub use transform::{grid_level, haar_analysis, haar_synthesis};
pub use tree::{tree_complete, Tree};
