//! Anchored (Cut) HDMR: first-order components, variance-based selection of
//! the active dimensions, the hybrid and adaptive truncations, the Cut to
//! ANOVA transform and the collocation-count ledgers.
//!
//! All constructions are generic over a [`Model`] returning a QoI vector;
//! formulas apply component-wise on a shared node set.

mod adaptive;
mod anova;
mod counts;
mod hybrid;
mod model;
mod sensitivity;

pub use adaptive::{
    adaptive_stats, build_adaptive, evaluate_adaptive, AdaptiveDecomposition, AdaptiveMoments, SubsetComponent,
};
pub use anova::{cut_to_anova, AnovaDecomposition};
pub use counts::{complexity_counts, complexity_counts_with, ComplexityCounts, Ledger};
pub use hybrid::{build_hybrid, evaluate_hybrid, hybrid_stats, HdmrLevels, HybridDecomposition, HybridParts, Moments};
pub use model::{FnModel, Model};
pub use sensitivity::{
    evaluate_lines, first_order_component, sensitivity_select, LineSet, SensitivityMeasure, SensitivityReport,
};
