//! Numerics for the renormalization-group fixed point of the fractional
//! symplectic-fermion model with quartic interaction.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`params`] | model parameters, kernel labels, scaling dimensions |
//! | [`cutoff`] | Gevrey-class cutoff `χ` and the bands `f_h` |
//! | [`quadrature`] | adaptive quadrature, radial transforms, tree distance, weighted norms |
//! | [`propagator`] | multi-scale propagators and their decay |
//! | [`trimming`] | localization and interpolation of test kernels |
//! | [`trees`] | expansion trees, bound constants, tree bounds |
//! | [`perturb`] | first-order couplings and the anomalous exponent `η₂` |
//! | [`response`] | free and leading-order response functions, scale sums, tails |

pub mod cutoff;
pub mod error;
pub mod params;
pub mod perturb;
pub mod propagator;
pub mod quadrature;
pub mod response;
pub mod trees;
pub mod trimming;

pub use error::{Error, Result};
