//! Special functions.

pub mod bessel;
pub mod debye;
pub mod legendre;

pub use bessel::{
    hankel_log_derivative, hankel_ratios, ratio_j, ratio_j_with, sph_bessel_j, sph_bessel_y,
    sph_hankel, CfOptions, HankelKind, HankelRatios, MAX_ORDER,
};
pub use debye::{debye_eval, DebyeAngles, DebyeValues, Scaled};
pub use legendre::{angular_kernels, ln_norm, AngularKernels};
