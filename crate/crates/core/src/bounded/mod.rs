//! Online bounded allocation: Algorithm 1, its potential function and
//! constants, the dual certificate audit, and the water-filling baseline.

mod algorithm;
mod audit;
mod potential;
mod waterfill;

pub use algorithm::{run_algorithm1, waterfill_baseline, BoundedRun, BoundedTrace, ItemTrace};
pub use audit::{dual_rate_audit, DualRateAudit, RateViolation, Regime};
pub use potential::{
    capacity_constant, consistency_bound, potential_f, potential_limit, robustness_bound, robustness_bound_at_floor,
    robustness_limit, PotentialCoefficients,
};
pub use waterfill::{water_fill_step, LevelState, Segment, Stage, WaterFillStep};
