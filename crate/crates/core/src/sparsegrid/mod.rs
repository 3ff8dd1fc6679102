//! Nested Clenshaw-Curtis Smolyak grids on `[-1, 1]^N` with weights for the
//! uniform probability density.

mod grid;
mod rule;

pub(crate) use grid::axpy;
pub use grid::{
    build_sparse_grid, build_sparse_grid_with_budget, count_nodes, interpolate, quadrature, variance_from_grid,
    SmolyakTerm, SparseGrid, Variance, DEFAULT_NODE_BUDGET,
};
pub use rule::{node_count, Rule1D};
