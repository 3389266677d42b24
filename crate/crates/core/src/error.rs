use thiserror::Error;

/// A parameter outside its admissible range. `section` names the parameter
/// group (`vehicle`, `tire.front`, ...) once known; it is empty when the error
/// comes straight from a parameter struct.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{}: {reason}", self.path())]
pub struct ParamError {
    pub section: &'static str,
    pub field: &'static str,
    pub reason: &'static str,
}

impl ParamError {
    pub(crate) const fn new(field: &'static str, reason: &'static str) -> Self {
        ParamError { section: "", field, reason }
    }

    pub fn in_section(self, section: &'static str) -> Self {
        ParamError { section, ..self }
    }

    /// `section.field`, or the bare field without a section.
    pub fn path(&self) -> alloc::string::String {
        if self.section.is_empty() {
            self.field.into()
        } else {
            alloc::format!("{}.{}", self.section, self.field)
        }
    }
}

/// Run-time failures of a simulation.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimError {
    #[error("state left the finite range at t = {time} s")]
    NonFiniteState { time: f64 },
    #[error("battery depleted at t = {time} s after {distance_m} m")]
    SocDepleted { time: f64, distance_m: f64 },
    #[error("battery cannot deliver {power_w} W (maximum {max_w} W)")]
    BatteryOverload { power_w: f64, max_w: f64 },
    #[error("ledger step {got} s does not match integrator step {expected} s")]
    GridMismatch { expected: f64, got: f64 },
    #[error("range extrapolation needs positive inputs: {0}")]
    Domain(&'static str),
    #[error("invalid parameter {0}")]
    Param(#[from] ParamError),
}
