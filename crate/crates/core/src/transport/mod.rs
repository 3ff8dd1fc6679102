//! Two-phase transport: fractional flow, implicit upwind saturation steps
//! and the sequential pressure/saturation loop.

mod fracflow;
mod impes;
mod saturation;

pub use fracflow::{fractional_flow, pvi_clock, total_mobility, water_cut, FracFlowModel, DEFAULT_VISCOSITY_RATIO};
pub use impes::{
    impes_run, FineVelocity, ImpesResult, MultiscaleVelocity, Schedule, VelocitySolver, WaterCutSeries,
};
pub use saturation::{
    advance_saturation, mass_balance_defect, SaturationStepper, BOUNDS_SLACK, MAX_HALVINGS, MAX_NEWTON_ITERATIONS,
    NEWTON_TOLERANCE,
};
