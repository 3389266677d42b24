//! Tire contact: slip kinematics, Dugoff combined-slip forces, rolling resistance.
//!
//! Sign conventions (wheel frame): `fx > 0` pushes the wheel forward, `fy > 0`
//! pushes it to the left. A positive slip angle (contact patch sliding to the
//! left) produces a negative, restoring `fy`.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct TireParams {
    /// Longitudinal slip stiffness (N per unit slip).
    pub c_kappa: f64,
    /// Cornering stiffness (N/rad).
    pub c_alpha: f64,
    /// Road friction coefficient.
    pub mu: f64,
    /// Low-speed regularization velocity (m/s).
    pub eps_v: f64,
}

impl Default for TireParams {
    fn default() -> Self {
        TireParams {
            c_kappa: 80_000.0,
            c_alpha: 60_000.0,
            mu: 0.9,
            eps_v: 0.3,
        }
    }
}

impl TireParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.c_kappa > 0.0 && self.c_kappa.is_finite()) {
            return Err(ParamError::new("c_kappa", "must be positive"));
        }
        if !(self.c_alpha > 0.0 && self.c_alpha.is_finite()) {
            return Err(ParamError::new("c_alpha", "must be positive"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.5) {
            return Err(ParamError::new("mu", "must lie in (0, 1.5]"));
        }
        if !(self.eps_v > 0.0 && self.eps_v.is_finite()) {
            return Err(ParamError::new("eps_v", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlipState {
    /// Slip ratio, saturated to [-1, 1].
    pub kappa: f64,
    /// Slip angle (rad), within (-π/2, π/2).
    pub alpha: f64,
}

/// Slip of one wheel from its wheel-frame contact velocity and spin.
pub fn slip_state(v_long: f64, v_lat: f64, omega: f64, r_w: f64, eps_v: f64) -> SlipState {
    let denom = v_long.abs().max(eps_v);
    let kappa = ((r_w * omega - v_long) / denom).clamp(-1.0, 1.0);
    let alpha = math::atan2(v_lat, denom);
    SlipState { kappa, alpha }
}

/// Dugoff combined-slip force `(fx, fy)` for vertical load `fz > 0`.
pub fn tire_force(slip: SlipState, fz: f64, p: &TireParams) -> (f64, f64) {
    let (fx, fy, _) = dugoff(slip, fz, p);
    (fx, fy)
}

/// Returns `(fx, fy, dfx/dkappa)` with the slip angle held fixed.
fn dugoff(slip: SlipState, fz: f64, p: &TireParams) -> (f64, f64, f64) {
    let fx0 = p.c_kappa * slip.kappa;
    let fy0 = -p.c_alpha * math::tan(slip.alpha);
    let resultant = math::sqrt(fx0 * fx0 + fy0 * fy0);
    let cap = p.mu * fz;
    // lambda = cap / (2 R) >= 1: linear region
    if 2.0 * resultant <= cap {
        return (fx0, fy0, p.c_kappa);
    }
    let scale = cap / resultant - cap * cap / (4.0 * resultant * resultant);
    let dscale_dr = -cap / (resultant * resultant) + cap * cap / (2.0 * resultant * resultant * resultant);
    let dr_dkappa = p.c_kappa * fx0 / resultant;
    let slope = p.c_kappa * scale + fx0 * dscale_dr * dr_dkappa;
    (fx0 * scale, fy0 * scale, slope)
}

/// Rolling-resistance moment opposing wheel spin, faded smoothly to zero at
/// standstill over a circumferential speed of about `eps_v`.
pub fn rolling_resistance(fz: f64, omega: f64, f_r: f64, r_w: f64, eps_v: f64) -> f64 {
    f_r * fz * r_w * math::tanh(omega * r_w / eps_v)
}

/// Tire model frozen at one wheel's contact velocity and load; evaluates the
/// longitudinal force as a function of the wheel speed for the implicit spin
/// update.
#[derive(Clone, Copy, Debug)]
pub struct Contact<'a> {
    pub v_long: f64,
    pub v_lat: f64,
    pub fz: f64,
    pub r_w: f64,
    pub params: &'a TireParams,
}

impl Contact<'_> {
    pub fn slip(&self, omega: f64) -> SlipState {
        slip_state(self.v_long, self.v_lat, omega, self.r_w, self.params.eps_v)
    }

    pub fn force(&self, omega: f64) -> (f64, f64) {
        tire_force(self.slip(omega), self.fz, self.params)
    }

    /// `(fx, dfx/domega)` at wheel speed `omega`.
    pub fn fx_and_slope(&self, omega: f64) -> (f64, f64) {
        let denom = self.v_long.abs().max(self.params.eps_v);
        let raw_kappa = (self.r_w * omega - self.v_long) / denom;
        let slip = self.slip(omega);
        let (fx, _, dfx_dkappa) = dugoff(slip, self.fz, self.params);
        let dkappa_domega = if raw_kappa.abs() < 1.0 { self.r_w / denom } else { 0.0 };
        (fx, dfx_dkappa * dkappa_domega)
    }

    /// Upper bound on `|fx|` over all wheel speeds.
    pub fn fx_bound(&self) -> f64 {
        let fx_lin = self.params.c_kappa;
        fx_lin.min(self.params.mu * self.fz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn free_rolling_has_no_slip() {
        let s = slip_state(10.0, 0.0, 10.0 / 0.3, 0.3, 0.3);
        assert_relative_eq!(s.kappa, 0.0, epsilon = 1e-12);
        assert_eq!(s.alpha, 0.0);
    }

    #[test]
    fn slip_ratio_and_angle_by_substitution() {
        let s = slip_state(10.0, 1.0, 10.5, 1.0, 0.3);
        assert_relative_eq!(s.kappa, 0.05, epsilon = 1e-12);
        assert_relative_eq!(s.alpha, libm::atan(0.1), epsilon = 1e-15);
        assert_relative_eq!(s.alpha, 0.0997, epsilon = 1e-4);
    }

    #[test]
    fn slip_is_saturated() {
        let s = slip_state(0.0, 0.0, 100.0, 0.3, 0.3);
        assert_eq!(s.kappa, 1.0);
        let s = slip_state(0.0, 1e9, 0.0, 0.3, 0.3);
        assert!(s.alpha <= core::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn zero_slip_gives_zero_force() {
        let p = TireParams::default();
        assert_eq!(tire_force(SlipState::default(), 4000.0, &p), (0.0, 0.0));
    }

    #[test]
    fn small_slip_is_linear() {
        let p = TireParams::default();
        let (fx, fy) = tire_force(SlipState { kappa: 0.01, alpha: 0.0 }, 10_000.0, &p);
        assert_relative_eq!(fx, 800.0, epsilon = 1e-9);
        assert_eq!(fy, 0.0);
    }

    #[test]
    fn rolling_resistance_values() {
        assert_relative_eq!(rolling_resistance(4000.0, 100.0, 0.01, 0.3, 0.3), 12.0, epsilon = 1e-12);
        assert_eq!(rolling_resistance(4000.0, 0.0, 0.01, 0.3, 0.3), 0.0);
        assert!(rolling_resistance(4000.0, -5.0, 0.01, 0.3, 0.3) < 0.0);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = TireParams::default();
        let c = Contact { v_long: 8.0, v_lat: 0.4, fz: 3500.0, r_w: 0.31, params: &p };
        for omega in [20.0, 25.0, 25.8, 26.5, 28.0, 30.0] {
            let h = 1e-6;
            let (_, slope) = c.fx_and_slope(omega);
            let fd = (c.force(omega + h).0 - c.force(omega - h).0) / (2.0 * h);
            assert_relative_eq!(slope, fd, max_relative = 1e-5, epsilon = 1e-3);
        }
    }

    proptest! {
        #[test]
        fn friction_circle_holds(kappa in -1.0f64..1.0, alpha in -1.5f64..1.5, fz in 100.0f64..8000.0) {
            let p = TireParams::default();
            let (fx, fy) = tire_force(SlipState { kappa, alpha }, fz, &p);
            prop_assert!(libm::sqrt(fx * fx + fy * fy) <= p.mu * fz + 1e-9);
        }

        #[test]
        fn force_is_odd(kappa in -1.0f64..1.0, alpha in -1.5f64..1.5, fz in 100.0f64..8000.0) {
            let p = TireParams::default();
            let (fx, fy) = tire_force(SlipState { kappa, alpha }, fz, &p);
            let (gx, gy) = tire_force(SlipState { kappa: -kappa, alpha: -alpha }, fz, &p);
            prop_assert_eq!(fx, -gx);
            prop_assert_eq!(fy, -gy);
        }

        #[test]
        fn linear_below_forty_percent(kappa in -0.005f64..0.005, alpha in -0.005f64..0.005, fz in 2000.0f64..8000.0) {
            let p = TireParams::default();
            let fx0 = p.c_kappa * kappa;
            let fy0 = -p.c_alpha * libm::tan(alpha);
            prop_assume!(libm::sqrt(fx0 * fx0 + fy0 * fy0) <= 0.4 * p.mu * fz);
            let (fx, fy) = tire_force(SlipState { kappa, alpha }, fz, &p);
            prop_assert_eq!(fx, fx0);
            prop_assert_eq!(fy, fy0);
        }

        #[test]
        fn rolling_resistance_dissipates(omega in -200.0f64..200.0, fz in 0.0f64..8000.0) {
            prop_assert!(rolling_resistance(fz, omega, 0.01, 0.31, 0.3) * omega >= 0.0);
        }
    }
}
