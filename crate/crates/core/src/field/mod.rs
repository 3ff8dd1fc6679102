//! Structured grids, the Gaussian-kernel covariance and the truncated
//! Karhunen-Loève expansion of the log-permeability.

mod covariance;
mod grid;
mod kle;
mod mean;
mod realize;

pub use covariance::{build_covariance, CovarianceSpec};
pub use grid::{Edge, StructuredGrid};
pub use kle::{compute_kle, compute_kle_separable, KLBasis, NEGATIVE_EIGENVALUE_TOLERANCE};
pub use mean::{channelized_mean, Ridge};
pub(crate) use realize::check_point;
pub use realize::{realize_field, realize_log_field, PermField};
