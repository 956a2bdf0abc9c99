//! Homogeneous symbols and their extensions to distributions on the whole
//! graded space.

mod cutoff;
mod extension;
mod symbol;
mod testfn;

pub use cutoff::{Bump, CutoffProfile};
pub use extension::{
    build_extension, c_alpha, classify, default_order, kernel_scaling_check, scaling_defect, DefectReport,
    ExtendedDistribution, PairingOptions, Regime,
};
pub use symbol::{parse_degree, Boundary, HomogeneousSymbol};
pub use testfn::{validate_derivatives, DerivativeFn, GaussianTest, TestFunction, ValueFn};
