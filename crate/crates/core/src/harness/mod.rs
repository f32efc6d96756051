//! Experiment harness: generate, predict, run, audit and report.
//!
//! A sweep runs one algorithm over a grid of `eta` values and prediction error
//! rates, repeating each cell with independently seeded instances and
//! predictions, and reports the competitive ratio `ALGO / OPT` against the
//! fractional offline optimum.

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{
    apply_generator_overrides, parse_generator_spec, parse_grid, Algorithm, CiMethod, InstanceSource, SweepConfig,
};
pub use report::{
    combined_svg, emit_report, parse_summary_csv, runs_csv, series_svg, summary_csv, OutputFormat, CSV_HEADER,
};
pub use sweep::{
    build_contexts, follow_prediction, mean_ci, run_sweep, run_sweep_on, CellSummary, Check, InstanceContext,
    RunRecord, SweepReport, ALGO2_MIN_ETA, BOUND_TOL,
};
