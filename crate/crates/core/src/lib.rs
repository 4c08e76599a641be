//! Spectral singularities of TE and TM surface modes of a spherical gain
//! medium: special functions, dispersion, reflection amplitudes,
//! asymptotic and exact singularity solvers, and field diagnostics.

pub mod error;
pub mod fields;
pub mod logreal;
pub mod medium;
pub mod par;
pub mod rootfind;
pub mod scattering;
pub mod sgm_asymptotic;
pub mod specfun;

pub use error::{Result, SgmError};
pub use logreal::LogReal;
pub use par::Execution;
