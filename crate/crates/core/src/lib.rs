//! Regularized traces of anisotropic pseudodifferential symbols on graded
//! spaces: homogeneous extensions, residue and trace densities, heat and zeta
//! invariants, and the volume constants of pseudohermitian manifolds.

pub mod aniso;
pub mod constants;
pub mod error;
pub mod heat;
pub mod homog;
pub mod quadrature;
pub mod pseudoherm;
pub mod residue;

pub use error::{Error, Result};
