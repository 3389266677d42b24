//! Battery → inverter → motor → fixed gear + open differential → rear axle,
//! plus friction brakes and regenerative blending.

mod battery;
mod motor;

pub use battery::{battery_power_demand, battery_step, terminal_current, BatteryParams, BatteryState};
pub use motor::{LossCoeffs, LossMap, LossMapError};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::wheel::{PerWheel, Wheel};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct PowertrainParams {
    /// Motor revolutions per wheel revolution.
    pub gear_ratio: f64,
    pub eta_diff: f64,
    pub eta_inv: f64,
    /// Peak motor torque below base speed (N m).
    pub t_peak: f64,
    /// Peak motor power above base speed (W).
    pub p_peak: f64,
    /// Battery charge power limit (W).
    pub p_regen_max: f64,
    /// Motor speed below which regen capacity fades linearly to zero (rad/s).
    pub regen_fade_speed: f64,
    /// Total friction brake torque at full pedal, summed over wheels (N m).
    pub brake_torque_max: f64,
    /// Fraction of friction brake torque on the front axle.
    pub brake_front_share: f64,
    pub loss: LossCoeffs,
    /// Tabulated loss, overriding `loss` when present.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub loss_map: Option<LossMap>,
}

impl Default for PowertrainParams {
    fn default() -> Self {
        PowertrainParams {
            gear_ratio: 9.0,
            eta_diff: 0.97,
            eta_inv: 0.95,
            t_peak: 310.0,
            p_peak: 150e3,
            p_regen_max: 60e3,
            regen_fade_speed: 30.0,
            brake_torque_max: 6000.0,
            brake_front_share: 0.6,
            loss: LossCoeffs::default(),
            loss_map: None,
        }
    }
}

impl PowertrainParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.gear_ratio > 0.0 && self.gear_ratio.is_finite()) {
            return Err(ParamError::new("gear_ratio", "must be positive"));
        }
        if !(self.eta_diff > 0.0 && self.eta_diff <= 1.0) {
            return Err(ParamError::new("eta_diff", "must lie in (0, 1]"));
        }
        if !(self.eta_inv > 0.0 && self.eta_inv <= 1.0) {
            return Err(ParamError::new("eta_inv", "must lie in (0, 1]"));
        }
        for (name, v) in [("t_peak", self.t_peak), ("p_peak", self.p_peak), ("brake_torque_max", self.brake_torque_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be positive"));
            }
        }
        for (name, v) in [("p_regen_max", self.p_regen_max), ("regen_fade_speed", self.regen_fade_speed)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.brake_front_share) {
            return Err(ParamError::new("brake_front_share", "must lie in [0, 1]"));
        }
        let c = &self.loss;
        if [c.k_c, c.k_i, c.k_w, c.k_0].iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(ParamError::new("loss", "coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Peak torque envelope: constant torque, then constant power.
    pub fn max_torque(&self, omega_m: f64) -> f64 {
        let w = omega_m.abs();
        if w * self.t_peak <= self.p_peak {
            self.t_peak
        } else {
            self.p_peak / w
        }
    }

    pub fn motor_loss(&self, torque: f64, omega_m: f64) -> f64 {
        match &self.loss_map {
            Some(m) => m.loss(torque, omega_m),
            None => self.loss.loss(torque, omega_m),
        }
    }

    /// Motor braking torque magnitude available for regeneration.
    pub fn regen_capacity(&self, omega_m: f64) -> f64 {
        if omega_m <= 0.0 {
            return 0.0;
        }
        let fade = if self.regen_fade_speed > 0.0 { (omega_m / self.regen_fade_speed).min(1.0) } else { 1.0 };
        self.max_torque(omega_m).min(self.p_regen_max / omega_m) * fade
    }
}

/// Driver actuator positions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActuatorCommand {
    pub accel_pedal: f64,
    pub brake_pedal: f64,
    /// Front-wheel steering angle (rad).
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TorqueCommand {
    /// Motor torque; negative while regenerating (N m).
    pub t_m: f64,
    /// Friction brake torque magnitude per wheel (N m).
    pub brake: PerWheel<f64>,
}

/// Maps pedals to motor and friction-brake torques.
///
/// Brake wins over accelerator. With regen enabled the motor covers as much
/// of the wheel braking demand as its capacity allows (rear axle only); the
/// friction brakes take the rest.
pub fn motor_torque_command(
    cmd: &ActuatorCommand,
    omega_m: f64,
    regen_enabled: bool,
    p: &PowertrainParams,
    battery: &BatteryState,
) -> TorqueCommand {
    if cmd.brake_pedal > 0.0 {
        let demand = cmd.brake_pedal.clamp(0.0, 1.0) * p.brake_torque_max;
        let mut t_m = 0.0;
        let mut regen_at_wheels = 0.0;
        if regen_enabled && battery.soc < 1.0 {
            let cap = p.regen_capacity(omega_m);
            let motor = (demand * p.eta_diff / p.gear_ratio).min(cap);
            t_m = -motor;
            regen_at_wheels = p.gear_ratio * motor / p.eta_diff;
        }
        let friction = (demand - regen_at_wheels).max(0.0);
        let front = 0.5 * friction * p.brake_front_share;
        let rear = 0.5 * friction * (1.0 - p.brake_front_share);
        let brake = PerWheel::from_fn(|w| if w.is_front() { front } else { rear });
        return TorqueCommand { t_m, brake };
    }
    let t_m = cmd.accel_pedal.clamp(0.0, 1.0) * p.max_torque(omega_m);
    TorqueCommand { t_m, brake: PerWheel::splat(0.0) }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DrivelineOutput {
    /// Axle torque per wheel; zero on the front axle (N m).
    pub t_w: PerWheel<f64>,
    /// Motor speed (rad/s).
    pub omega_m: f64,
}

/// Motor speed from the rear wheels and equal-split axle torques. The
/// differential efficiency divides instead of multiplies when power flows
/// back from the wheels.
pub fn driveline_forward(t_m: f64, omega: &PerWheel<f64>, p: &PowertrainParams) -> DrivelineOutput {
    let omega_m = motor_speed(omega, p);
    let per_wheel = 0.5 * p.gear_ratio * t_m * diff_factor(t_m, p.eta_diff);
    let t_w = PerWheel::from_fn(|w| if w.is_front() { 0.0 } else { per_wheel });
    DrivelineOutput { t_w, omega_m }
}

pub fn motor_speed(omega: &PerWheel<f64>, p: &PowertrainParams) -> f64 {
    0.5 * p.gear_ratio * (omega[Wheel::LeftRear] + omega[Wheel::RightRear])
}

/// `η` for traction, `1/η` for regeneration.
pub fn diff_factor(t_m: f64, eta_diff: f64) -> f64 {
    if t_m >= 0.0 {
        eta_diff
    } else {
        1.0 / eta_diff
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotorPower {
    /// Shaft power (W).
    pub p_out: f64,
    pub p_loss: f64,
    /// Electrical input (W).
    pub p_in: f64,
}

pub fn motor_electrical(t_m: f64, omega_m: f64, p: &PowertrainParams) -> MotorPower {
    let p_out = t_m * omega_m;
    let p_loss = p.motor_loss(t_m, omega_m);
    MotorPower { p_out, p_loss, p_in: p_out + p_loss }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn batt() -> BatteryState {
        BatteryParams::default().initial_state()
    }

    #[test]
    fn coasting_commands_nothing() {
        let c = motor_torque_command(&ActuatorCommand::default(), 300.0, true, &PowertrainParams::default(), &batt());
        assert_eq!(c, TorqueCommand::default());
    }

    #[test]
    fn friction_only_braking_splits_by_share() {
        let p = PowertrainParams::default();
        let cmd = ActuatorCommand { brake_pedal: 0.5, ..Default::default() };
        let c = motor_torque_command(&cmd, 300.0, false, &p, &batt());
        assert_eq!(c.t_m, 0.0);
        assert_relative_eq!(c.brake.sum(), 0.5 * p.brake_torque_max, max_relative = 1e-15);
        assert_relative_eq!(c.brake.front_sum(), 0.6 * 0.5 * p.brake_torque_max, max_relative = 1e-15);
        assert_relative_eq!(c.brake.rear_sum(), 0.4 * 0.5 * p.brake_torque_max, max_relative = 1e-15);
        assert_eq!(c.brake[Wheel::LeftFront], c.brake[Wheel::RightFront]);
    }

    #[test]
    fn small_demand_is_all_regen() {
        let p = PowertrainParams::default();
        let omega_m = 400.0;
        let cmd = ActuatorCommand { brake_pedal: 0.05, ..Default::default() };
        // wheel demand 300 N m -> 300·0.97/9 = 32.3 N m at the motor,
        // below min(T_max, 60 kW / 400 rad/s = 150 N m)
        let c = motor_torque_command(&cmd, omega_m, true, &p, &batt());
        assert!(c.t_m < 0.0);
        assert_relative_eq!(c.t_m, -0.05 * 6000.0 * 0.97 / 9.0, max_relative = 1e-12);
        assert!(c.brake.0.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn large_demand_blends_regen_and_friction() {
        let p = PowertrainParams::default();
        let omega_m = 600.0;
        let cmd = ActuatorCommand { brake_pedal: 0.8, ..Default::default() };
        let c = motor_torque_command(&cmd, omega_m, true, &p, &batt());
        assert_relative_eq!(c.t_m, -60e3 / 600.0, max_relative = 1e-12);
        let regen_wheel = 9.0 * 100.0 / 0.97;
        assert_relative_eq!(c.brake.sum() + regen_wheel, 0.8 * 6000.0, max_relative = 1e-12);
    }

    #[test]
    fn brake_wins_over_accelerator() {
        let cmd = ActuatorCommand { accel_pedal: 1.0, brake_pedal: 0.1, delta: 0.0 };
        let c = motor_torque_command(&cmd, 100.0, false, &PowertrainParams::default(), &batt());
        assert_eq!(c.t_m, 0.0);
        assert!(c.brake.sum() > 0.0);
    }

    #[test]
    fn no_regen_at_standstill() {
        let p = PowertrainParams::default();
        assert_eq!(p.regen_capacity(0.0), 0.0);
        assert!(p.regen_capacity(10.0) < p.regen_capacity(30.0));
    }

    #[test]
    fn driveline_torque_split() {
        let p = PowertrainParams { gear_ratio: 9.0, eta_diff: 0.97, ..Default::default() };
        let om = PerWheel::splat(10.0);
        assert_eq!(driveline_forward(0.0, &om, &p).t_w, PerWheel::splat(0.0));
        let fwd = driveline_forward(100.0, &om, &p);
        assert_relative_eq!(fwd.t_w[Wheel::LeftRear], 436.5, max_relative = 1e-12);
        assert_eq!(fwd.t_w[Wheel::RightRear], fwd.t_w[Wheel::LeftRear]);
        assert_eq!(fwd.t_w.front_sum(), 0.0);
        assert_relative_eq!(fwd.omega_m, 90.0);
        let rev = driveline_forward(-100.0, &om, &p);
        // 9·100 / (0.97·2)
        assert_relative_eq!(rev.t_w[Wheel::LeftRear], -463.917_525_773_195_9, max_relative = 1e-12);
    }

    #[test]
    fn driveline_power_balance_for_equal_rear_speeds() {
        let p = PowertrainParams::default();
        let om = PerWheel([31.0, 31.5, 30.0, 30.0]);
        let out = driveline_forward(120.0, &om, &p);
        let wheel_power = out.t_w[Wheel::LeftRear] * 30.0 + out.t_w[Wheel::RightRear] * 30.0;
        assert_relative_eq!(120.0 * out.omega_m * p.eta_diff, wheel_power, max_relative = 1e-14);
    }

    #[test]
    fn motor_power_chain() {
        let lossless = PowertrainParams { loss: LossCoeffs { k_c: 0.0, k_i: 0.0, k_w: 0.0, k_0: 0.0 }, ..Default::default() };
        let m = motor_electrical(50.0, 200.0, &lossless);
        assert_eq!(m.p_in, m.p_out);
        let p = PowertrainParams::default();
        assert_eq!(motor_electrical(0.0, 0.0, &p).p_in, p.loss.k_0);
    }

    #[test]
    fn torque_envelope() {
        let p = PowertrainParams::default();
        assert_eq!(p.max_torque(100.0), 310.0);
        assert_relative_eq!(p.max_torque(1000.0), 150.0);
    }
}
