//! Planar dual-track simulation of a rear-wheel-driven electric vehicle with a
//! battery-to-maneuver energy ledger.
//!
//! The crate is `no_std` (it needs `alloc` for drive cycles, lane schedules and
//! traces). All transcendental functions go through [`libm`], so runs are
//! bit-reproducible across targets.
//!
//! Data flow for one integrator step:
//!
//! ```text
//! driver -> powertrain (motor, brakes, differential) -> tire (implicit wheel spin)
//!        -> dynamics (chassis step) -> energy ledger
//! ```
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod driver;
pub mod dynamics;
pub mod energy;
mod error;
pub(crate) mod math;
pub mod powertrain;
pub mod scenario;
pub mod tire;
mod wheel;

pub use error::{ParamError, SimError};
pub use wheel::{PerWheel, Wheel};

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.80665;

/// Joules per kilowatt-hour.
pub const J_PER_KWH: f64 = 3.6e6;
