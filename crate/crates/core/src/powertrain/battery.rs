//! Open-circuit voltage plus series resistance, with coulomb counting.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SimError};
use crate::math;
use crate::J_PER_KWH;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct BatteryParams {
    /// Pack energy (kWh).
    pub capacity_kwh: f64,
    /// Open-circuit voltage at 0 % and 100 % charge; affine in between (V).
    pub v_oc_empty: f64,
    pub v_oc_full: f64,
    /// Internal resistance (Ω).
    pub r_int: f64,
    /// Current limit, both directions (A).
    pub i_max: f64,
    /// Initial state of charge.
    pub soc_init: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        BatteryParams {
            capacity_kwh: 54.28,
            v_oc_empty: 320.0,
            v_oc_full: 400.0,
            r_int: 0.08,
            i_max: 800.0,
            soc_init: 0.9,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.capacity_kwh > 0.0 && self.capacity_kwh.is_finite()) {
            return Err(ParamError::new("capacity_kwh", "must be positive"));
        }
        if !(self.v_oc_empty > 0.0 && self.v_oc_full >= self.v_oc_empty && self.v_oc_full.is_finite()) {
            return Err(ParamError::new("v_oc_full", "need 0 < v_oc_empty <= v_oc_full"));
        }
        if !(self.r_int >= 0.0 && self.r_int.is_finite()) {
            return Err(ParamError::new("r_int", "must be non-negative"));
        }
        if self.i_max.is_nan() || self.i_max <= 0.0 {
            return Err(ParamError::new("i_max", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.soc_init) {
            return Err(ParamError::new("soc_init", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn v_oc(&self, soc: f64) -> f64 {
        self.v_oc_empty + (self.v_oc_full - self.v_oc_empty) * soc
    }

    /// Charge moved by a full discharge (C). With the affine OCV this makes
    /// the open-circuit energy of a full discharge equal `capacity_kwh`.
    pub fn charge_capacity(&self) -> f64 {
        self.capacity_kwh * J_PER_KWH / (0.5 * (self.v_oc_empty + self.v_oc_full))
    }

    pub fn initial_state(&self) -> BatteryState {
        BatteryState { soc: self.soc_init, v_b: self.v_oc(self.soc_init), i_b: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatteryState {
    pub soc: f64,
    /// Terminal voltage (V).
    pub v_b: f64,
    /// Current, positive when discharging (A).
    pub i_b: f64,
}

impl BatteryState {
    pub fn power(&self) -> f64 {
        self.v_b * self.i_b
    }
}

/// Battery output power for a motor electrical input `p_m_in`: the inverter
/// loses `1 − η` of the flow in either direction, switching on torque sign.
pub fn battery_power_demand(p_m_in: f64, t_m: f64, eta_inv: f64) -> f64 {
    if t_m >= 0.0 {
        p_m_in / eta_inv
    } else {
        p_m_in * eta_inv
    }
}

/// Current drawn at terminal power `p` (physical, small-current root of
/// `r i² − v_oc i + p = 0`).
pub fn terminal_current(p: f64, v_oc: f64, r_int: f64) -> Result<f64, SimError> {
    if r_int == 0.0 {
        return Ok(p / v_oc);
    }
    let disc = v_oc * v_oc - 4.0 * r_int * p;
    if disc < 0.0 {
        return Err(SimError::BatteryOverload { power_w: p, max_w: v_oc * v_oc / (4.0 * r_int) });
    }
    // 2p / (v + √d) is the same root without cancellation at small p
    Ok(2.0 * p / (v_oc + math::sqrt(disc)))
}

/// Advances the pack by one step at motor electrical input `p_m_in`.
///
/// Charging is clipped to `p_regen_max` and refused at full charge. Returns
/// `SocDepleted` (time and distance unset) when discharge empties the pack.
pub fn battery_step(
    p_m_in: f64,
    t_m: f64,
    eta_inv: f64,
    p_regen_max: f64,
    state: &BatteryState,
    p: &BatteryParams,
    dt: f64,
) -> Result<BatteryState, SimError> {
    let mut p_b = battery_power_demand(p_m_in, t_m, eta_inv);
    if p_b < 0.0 {
        p_b = if state.soc >= 1.0 { 0.0 } else { p_b.max(-p_regen_max) };
    }
    let v_oc = p.v_oc(state.soc);
    let i_b = terminal_current(p_b, v_oc, p.r_int)?;
    if i_b.abs() > p.i_max {
        return Err(SimError::BatteryOverload { power_w: p_b, max_w: p.i_max * v_oc });
    }
    let soc = state.soc - i_b * dt / p.charge_capacity();
    if soc <= 0.0 && i_b > 0.0 {
        return Err(SimError::SocDepleted { time: f64::NAN, distance_m: f64::NAN });
    }
    Ok(BatteryState { soc: soc.min(1.0), v_b: v_oc - i_b * p.r_int, i_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn idle_pack_is_unchanged() {
        let p = BatteryParams::default();
        let s0 = p.initial_state();
        let s1 = battery_step(0.0, 0.0, 0.95, 60e3, &s0, &p, 1e-3).unwrap();
        assert_eq!(s1.i_b, 0.0);
        assert_eq!(s1.soc, s0.soc);
    }

    #[test]
    fn ohmic_free_current_is_a_division() {
        assert_relative_eq!(terminal_current(36e3, 360.0, 0.0).unwrap(), 100.0);
    }

    #[test]
    fn current_with_internal_resistance() {
        let i = terminal_current(36e3, 360.0, 0.1).unwrap();
        let oracle = (360.0 - libm::sqrt(360.0 * 360.0 - 4.0 * 0.1 * 36e3)) / (2.0 * 0.1);
        assert_relative_eq!(i, oracle, max_relative = 1e-12);
        assert_relative_eq!(i, 102.9, epsilon = 0.05);
    }

    #[test]
    fn overload_is_reported() {
        assert!(matches!(terminal_current(1e9, 360.0, 0.1), Err(SimError::BatteryOverload { .. })));
    }

    #[test]
    fn traction_draws_more_than_regen_returns() {
        let d = battery_power_demand(10e3, 1.0, 0.95);
        let c = battery_power_demand(-10e3, -1.0, 0.95);
        assert!(d > c.abs());
    }

    #[test]
    fn full_pack_refuses_charge() {
        let p = BatteryParams { soc_init: 1.0, ..Default::default() };
        let s = battery_step(-20e3, -50.0, 0.95, 60e3, &p.initial_state(), &p, 1.0).unwrap();
        assert_eq!(s.i_b, 0.0);
        assert!(s.soc <= 1.0);
    }

    #[test]
    fn regen_is_clipped_to_charge_limit() {
        let p = BatteryParams { r_int: 0.0, ..Default::default() };
        let s = battery_step(-200e3, -50.0, 1.0, 60e3, &p.initial_state(), &p, 1e-3).unwrap();
        assert_relative_eq!(s.power(), -60e3, max_relative = 1e-12);
    }

    #[test]
    fn empty_pack_reports_depletion() {
        let p = BatteryParams { soc_init: 1e-9, ..Default::default() };
        let r = battery_step(50e3, 100.0, 0.95, 60e3, &p.initial_state(), &p, 1.0);
        assert!(matches!(r, Err(SimError::SocDepleted { .. })));
    }

    #[test]
    fn full_discharge_releases_rated_energy() {
        let p = BatteryParams { r_int: 0.0, soc_init: 1.0, ..Default::default() };
        let mut s = p.initial_state();
        let mut energy = 0.0;
        let dt = 1.0;
        while let Ok(n) = battery_step(30e3 * 0.95, 1.0, 0.95, 60e3, &s, &p, dt) {
            energy += n.power() * dt;
            s = n;
        }
        assert_relative_eq!(energy / J_PER_KWH, 54.28, max_relative = 2e-3);
    }
}
