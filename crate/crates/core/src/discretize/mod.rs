//! Entries, quadrature and right-hand-side coefficients.

mod entries;
mod kernel;
mod quadrature;
mod rhs;

pub use entries::{apply_dense, assemble_dense, galerkin_entry_k, Block, EntryCache};
pub use kernel::{solid_angle, Kernel};
pub use quadrature::{gauss_legendre, GaussRule, QuadConfig};
pub use rhs::{cell_integral, cell_moments, rhs_coefficient, rhs_eval, RightHandSide};

pub(crate) use entries::{box_distance, cell_para, Para};
pub(crate) use rhs::{haar_moments, para_integral, para_square_integral};
