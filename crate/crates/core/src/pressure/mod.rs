//! Locally conservative mixed pressure solvers: the fine two-point
//! (lowest-order mixed) solver and the mixed multiscale method with local
//! or global boundary information for its velocity basis.

mod basis;
mod coarse;
mod fine;
mod library;
mod partition;

pub use basis::{
    assemble_ms_basis_set, build_ms_basis, BasisFlavor, BoundaryData, MsBasis, MsBasisSet, DEGENERATE_FLUX,
};
pub use coarse::{solve_coarse, CoarseSolution};
pub use fine::{
    solve_fine_mixed, solve_singlephase_global, MixedSolution, Wells, COMPATIBILITY_TOLERANCE, RESIDUAL_TOLERANCE,
};
pub use library::VelocityLibrary;
pub use partition::CoarsePartition;
