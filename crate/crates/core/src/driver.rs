//! Closed-loop driver: PI speed tracking on the pedals and a preview-point
//! steering law following quintic lane-change references.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::dynamics::ChassisState;
use crate::error::ParamError;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct DriverParams {
    /// Pedal per m/s of speed error.
    pub kp: f64,
    /// Pedal per m of integrated speed error.
    pub ki: f64,
    /// How far ahead on the cycle the driver reads the target speed (s).
    pub speed_preview: f64,
    /// Lateral preview distance (m).
    pub lookahead: f64,
    /// Steering per m of preview error (rad/m).
    pub k_lat: f64,
    pub delta_max: f64,
    /// Steering rate limit (rad/s).
    pub delta_rate_max: f64,
    /// Speed-error band with both pedals released (m/s).
    pub pedal_deadband: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            kp: 0.3,
            ki: 0.05,
            speed_preview: 0.0,
            lookahead: 10.0,
            k_lat: 0.05,
            delta_max: 0.6,
            delta_rate_max: 0.5,
            pedal_deadband: 0.02,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("k_lat", self.k_lat), ("speed_preview", self.speed_preview), ("pedal_deadband", self.pedal_deadband)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be non-negative"));
            }
        }
        for (name, v) in [("lookahead", self.lookahead), ("delta_max", self.delta_max), ("delta_rate_max", self.delta_rate_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pedals {
    pub accel: f64,
    pub brake: f64,
}

/// PI speed controller with conditional-integration anti-windup.
#[derive(Clone, Debug)]
pub struct LongitudinalController {
    params: DriverParams,
    integral: f64,
}

impl LongitudinalController {
    pub fn new(params: DriverParams) -> Self {
        LongitudinalController { params, integral: 0.0 }
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn control(&mut self, v_target: f64, v_x: f64, dt: f64) -> Pedals {
        let p = &self.params;
        if v_target <= 0.0 && v_x <= 0.0 {
            // parked: release and forget
            self.integral = 0.0;
            return Pedals::default();
        }
        let error = v_target - v_x;
        let u_free = p.kp * error + p.ki * self.integral;
        let saturated = (u_free >= 1.0 && error > 0.0) || (u_free <= -1.0 && error < 0.0);
        if !saturated {
            self.integral += error * dt;
        }
        let u = p.kp * error + p.ki * self.integral;
        if u.abs() <= p.kp * p.pedal_deadband {
            Pedals::default()
        } else if u > 0.0 {
            Pedals { accel: u.min(1.0), brake: 0.0 }
        } else {
            Pedals { accel: 0.0, brake: (-u).min(1.0) }
        }
    }
}

/// Lane width and maneuver length of a single lane change.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct LaneGeometry {
    pub width: f64,
    pub length: f64,
}

impl Default for LaneGeometry {
    fn default() -> Self {
        LaneGeometry { width: 3.5, length: 150.0 }
    }
}

impl LaneGeometry {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(ParamError::new("width", "must be positive"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(ParamError::new("length", "must be positive"));
        }
        Ok(())
    }
}

/// One lane change along arc length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneChange {
    pub start: f64,
    pub length: f64,
    /// Signed offset change (m), positive to the left.
    pub delta_y: f64,
}

impl LaneChange {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Lateral target as a function of arc length: a sequence of
/// non-overlapping quintic lane changes, sorted by start.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LateralReference {
    pub segments: Vec<LaneChange>,
}

impl LateralReference {
    pub fn straight() -> Self {
        LateralReference::default()
    }

    /// `(y_ref, dy_ref/ds)` at arc length `s`.
    pub fn at(&self, s: f64) -> (f64, f64) {
        lane_change_reference(&self.segments, s)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Minimum-jerk lane-change blend: zero slope and curvature at both ends of
/// every segment, constant offset between segments.
pub fn lane_change_reference(segments: &[LaneChange], s: f64) -> (f64, f64) {
    let mut offset = 0.0;
    for seg in segments {
        if s <= seg.start {
            break;
        }
        if s >= seg.end() {
            offset += seg.delta_y;
            continue;
        }
        let u = (s - seg.start) / seg.length;
        let u2 = u * u;
        let shape = u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
        let slope = 30.0 * u2 * (1.0 - u) * (1.0 - u) / seg.length;
        return (offset + seg.delta_y * shape, seg.delta_y * slope);
    }
    (offset, 0.0)
}

/// Preview-point steering with angle and rate limits.
#[derive(Clone, Debug)]
pub struct LateralController {
    params: DriverParams,
    delta: f64,
}

impl LateralController {
    pub fn new(params: DriverParams) -> Self {
        LateralController { params, delta: 0.0 }
    }

    pub fn control(&mut self, chassis: &ChassisState, reference: &LateralReference, s: f64, dt: f64) -> f64 {
        self.control_to(chassis, |s| reference.at(s).0, s, dt)
    }

    /// Same law against an arbitrary target offset `y_ref(s)`.
    pub fn control_to(&mut self, chassis: &ChassisState, y_ref: impl Fn(f64) -> f64, s: f64, dt: f64) -> f64 {
        let p = &self.params;
        let y_ref = y_ref(s + p.lookahead);
        let error = y_ref - (chassis.y + p.lookahead * math::sin(chassis.psi));
        let demand = (p.k_lat * error).clamp(-p.delta_max, p.delta_max);
        let max_change = p.delta_rate_max * dt;
        self.delta += (demand - self.delta).clamp(-max_change, max_change);
        self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_change() -> Vec<LaneChange> {
        alloc::vec![LaneChange { start: 100.0, length: 150.0, delta_y: 3.5 }]
    }

    #[test]
    fn matched_speed_releases_pedals() {
        let mut c = LongitudinalController::new(DriverParams::default());
        assert_eq!(c.control(12.0, 12.0, 1e-3), Pedals::default());
        assert_eq!(c.integral(), 0.0);
    }

    #[test]
    fn large_error_saturates_accelerator() {
        let mut c = LongitudinalController::new(DriverParams::default());
        assert_eq!(c.control(30.0, 0.0, 1e-3), Pedals { accel: 1.0, brake: 0.0 });
        let integral = c.integral();
        c.control(30.0, 0.0, 1e-3);
        assert_eq!(c.integral(), integral, "integrator must not wind up while saturated");
    }

    #[test]
    fn overspeed_brakes() {
        let mut c = LongitudinalController::new(DriverParams::default());
        let p = c.control(10.0, 12.0, 1e-3);
        assert_eq!(p.accel, 0.0);
        assert!(p.brake > 0.5);
    }

    #[test]
    fn before_first_segment_is_flat() {
        assert_eq!(lane_change_reference(&one_change(), 50.0), (0.0, 0.0));
    }

    #[test]
    fn midpoint_is_half_the_offset() {
        let (y, _) = lane_change_reference(&one_change(), 175.0);
        assert_relative_eq!(y, 1.75, epsilon = 1e-12);
        let (y, slope) = lane_change_reference(&one_change(), 400.0);
        assert_eq!((y, slope), (3.5, 0.0));
    }

    #[test]
    fn peak_slope_is_fifteen_eighths() {
        let segs = one_change();
        let peak = (0..=15_000)
            .map(|i| lane_change_reference(&segs, 100.0 + i as f64 * 0.01).1)
            .fold(0.0f64, f64::max);
        assert_relative_eq!(peak, 15.0 / 8.0 * 3.5 / 150.0, max_relative = 1e-9);
    }

    #[test]
    fn second_derivative_is_continuous_across_boundaries() {
        let segs = alloc::vec![
            LaneChange { start: 100.0, length: 150.0, delta_y: 3.5 },
            LaneChange { start: 250.0, length: 150.0, delta_y: -3.5 },
        ];
        let h = 1e-3;
        let curv = |s: f64| {
            let (a, _) = lane_change_reference(&segs, s - h);
            let (b, _) = lane_change_reference(&segs, s);
            let (c, _) = lane_change_reference(&segs, s + h);
            (a - 2.0 * b + c) / (h * h)
        };
        for boundary in [100.0, 250.0, 400.0] {
            assert!(curv(boundary - 0.01).abs() < 1e-3);
            assert!(curv(boundary + 0.01).abs() < 1e-3);
        }
    }

    #[test]
    fn on_reference_driving_does_not_steer() {
        let mut c = LateralController::new(DriverParams::default());
        let d = c.control(&ChassisState::straight(20.0), &LateralReference::straight(), 0.0, 1e-3);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn proportional_law_before_saturation() {
        let p = DriverParams { delta_rate_max: 1e6, ..Default::default() };
        let mut c = LateralController::new(p);
        let reference = LateralReference { segments: alloc::vec![LaneChange { start: 0.0, length: 1e-9, delta_y: 0.5 }] };
        let d = c.control(&ChassisState::straight(20.0), &reference, 1.0, 1e-3);
        assert_relative_eq!(d, p.k_lat * 0.5, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn pedals_are_exclusive(target in 0.0f64..40.0, speeds in proptest::collection::vec(0.0f64..40.0, 1..50)) {
            let mut c = LongitudinalController::new(DriverParams::default());
            for v in speeds {
                let p = c.control(target, v, 1e-2);
                prop_assert_eq!(p.accel * p.brake, 0.0);
                prop_assert!((0.0..=1.0).contains(&p.accel) && (0.0..=1.0).contains(&p.brake));
            }
        }

        #[test]
        fn steering_respects_limits(ys in proptest::collection::vec(-50.0f64..50.0, 1..50), psi in -1.0f64..1.0) {
            let p = DriverParams::default();
            let mut c = LateralController::new(p);
            let dt = 1e-3;
            let mut prev = 0.0;
            for y in ys {
                let chassis = ChassisState { y, psi, ..ChassisState::straight(10.0) };
                let d = c.control(&chassis, &LateralReference::straight(), 0.0, dt);
                prop_assert!(d.abs() <= p.delta_max);
                prop_assert!((d - prev).abs() <= p.delta_rate_max * dt * (1.0 + 1e-12));
                prev = d;
            }
        }
    }
}
