//! Stochastic multiscale simulation of two-phase flow in random porous media.
//!
//! The crate is split along the natural seams of the method:
//!
//! * [`field`]: structured grids, the Gaussian-kernel covariance, the
//!   Karhunen-Loève basis and log-normal permeability realizations.
//! * [`sparsegrid`]: nested Clenshaw-Curtis Smolyak grids for the uniform
//!   density on `[-1, 1]^N` (quadrature, variance, interpolation).
//! * [`hdmr`]: anchored (Cut) HDMR components, variance-based selection of
//!   active dimensions, the hybrid and adaptive truncations, the Cut to
//!   ANOVA transform and collocation-count ledgers.
//! * [`pressure`]: locally conservative mixed solvers on the fine grid and
//!   the mixed multiscale method with local or global boundary data.
//! * [`transport`]: fractional flow, implicit upwind saturation transport
//!   and the sequential pressure/saturation driver.
//!
//! Everything here is `no_std` + `alloc`; IO, file formats, parallel
//! evaluation and the CLI live in the companion `stochflow` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod field;
pub mod hdmr;
pub mod linalg;
pub mod math;
pub mod pressure;
pub mod sparsegrid;
pub mod transport;

pub use error::{Error, Result};
