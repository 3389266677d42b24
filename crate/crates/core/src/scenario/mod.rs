//! Drive cycles, lane-change schedules, the closed-loop run and range
//! extrapolation.

mod cycle;
mod range;
mod schedule;
mod sim;

pub use cycle::{CycleError, DriveCycle};
pub use range::range_extrapolate;
pub use schedule::schedule_lane_changes;
pub use sim::{run, run_traced, trace_columns, RunResult, Scenario, TraceRow, STANDSTILL_SPEED};
