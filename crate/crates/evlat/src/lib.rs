//! File formats, configuration, batch execution and reporting around
//! [`evlat_core`].
//!
//! A run goes config file → [`config::RunConfig`] → one
//! [`evlat_core::scenario::Scenario`] per entry → [`batch::run_batch`] →
//! trace and summary files plus a console table.

pub mod batch;
pub mod config;
pub mod cycle_file;
pub mod report;

pub use evlat_core as core;
