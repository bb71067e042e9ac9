//! Integration primitives.
//!
//! * [`integrate`] and friends: globally adaptive 21-point Gauss–Kronrod.
//! * [`radial_fourier`]: isotropic Fourier transforms in d = 1, 2, 3.
//! * [`tree_distance`], [`weighted_l1_norm`]: the geometric weight of the
//!   kernel norm, with the Euclidean minimum spanning tree standing in for
//!   the Steiner tree.
//! * [`RadialSamples`]: sampled radial functions and their CSV form.

mod adaptive;
mod geometry;
pub(crate) mod radial;
mod samples;
mod sum;

pub use adaptive::{
    gauss_legendre, integrate, integrate_adaptive, integrate_breakpoints, integrate_semi_infinite, Estimate,
    QuadConfig,
};
pub use geometry::{tree_distance, weighted_l1_norm, NormGrid, NormResult, WeightSpec};
pub use radial::{radial_fourier, radial_kernel, sphere_area};
pub use samples::{log_grid, round_sig, RadialSamples, SampleMeta};
pub(crate) use samples::sci;
pub use sum::{compensated_sum, NeumaierSum};
