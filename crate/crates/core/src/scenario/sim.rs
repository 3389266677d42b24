use alloc::string::String;
use alloc::vec::Vec;

use super::{schedule_lane_changes, DriveCycle};
use crate::driver::{DriverParams, LaneGeometry, LateralController, LongitudinalController, Pedals};
use crate::dynamics::{self, ChassisState, VehicleParams, WheelTorques};
use crate::energy::{self, EnergyLedger, LossShare, PowerSample, StepInputs};
use crate::error::{ParamError, SimError};
use crate::powertrain::{self, ActuatorCommand, BatteryParams, PowertrainParams};
use crate::tire::{self, Contact, TireParams};
use crate::wheel::{PerWheel, Wheel};
use crate::{math, J_PER_KWH};

/// Below this speed (m/s) a braking vehicle is held at rest.
pub const STANDSTILL_SPEED: f64 = 1e-3;

/// Laps driven at most in depletion mode before giving up.
const MAX_DEPLETION_LAPS: u32 = 10_000;

/// One closed-loop run: a cycle, a lane-change schedule and every parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub cycle: DriveCycle,
    /// Nominal distance between lane changes (m); 0 disables them.
    pub lane_change_interval: f64,
    pub lane: LaneGeometry,
    pub regen_enabled: bool,
    /// Back-to-back repetitions of the cycle.
    pub repetitions: u32,
    /// Repeat the cycle until the pack is empty instead.
    pub to_depletion: bool,
    /// Integrator step (s).
    pub dt: f64,
    /// Spacing of trace rows (s); only used by [`run_traced`].
    pub trace_interval: f64,
    pub vehicle: VehicleParams,
    pub tire_front: TireParams,
    pub tire_rear: TireParams,
    pub powertrain: PowertrainParams,
    pub battery: BatteryParams,
    pub driver: DriverParams,
}

impl Scenario {
    /// Default parameters, lane changes every kilometre, regen on.
    pub fn new(name: impl Into<String>, cycle: DriveCycle) -> Self {
        Scenario {
            name: name.into(),
            cycle,
            lane_change_interval: 1000.0,
            lane: LaneGeometry::default(),
            regen_enabled: true,
            repetitions: 1,
            to_depletion: false,
            dt: 1e-3,
            trace_interval: 0.01,
            vehicle: VehicleParams::default(),
            tire_front: TireParams::default(),
            tire_rear: TireParams::default(),
            powertrain: PowertrainParams::default(),
            battery: BatteryParams::default(),
            driver: DriverParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.vehicle.validate().map_err(|e| e.in_section("vehicle"))?;
        self.tire_front.validate().map_err(|e| e.in_section("tire.front"))?;
        self.tire_rear.validate().map_err(|e| e.in_section("tire.rear"))?;
        self.powertrain.validate().map_err(|e| e.in_section("powertrain"))?;
        self.battery.validate().map_err(|e| e.in_section("battery"))?;
        self.driver.validate().map_err(|e| e.in_section("driver"))?;
        self.lane.validate().map_err(|e| e.in_section("lane"))?;
        let sim = |field, reason| ParamError::new(field, reason).in_section("simulation");
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(sim("dt", "must lie in (0, 0.01]"));
        }
        if !(self.trace_interval > 0.0 && self.trace_interval.is_finite()) {
            return Err(sim("trace_interval", "must be positive"));
        }
        if !(self.lane_change_interval >= 0.0 && self.lane_change_interval.is_finite()) {
            return Err(sim("lane_change_interval", "must be non-negative"));
        }
        if self.repetitions < 1 {
            return Err(sim("repetitions", "must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub regen_enabled: bool,
    pub lane_change_interval: f64,
    pub lane_changes: usize,
    /// `∫ v_x dt` (m).
    pub distance_m: f64,
    pub duration_s: f64,
    pub ledger: EnergyLedger,
    pub rms_speed_error: f64,
    /// Largest `|Y − y_ref(s)|` over the run (m).
    pub peak_lateral_error: f64,
    pub final_soc: f64,
    /// Ended because the pack ran empty (depletion mode only).
    pub depleted: bool,
    pub loss_share: LossShare,
}

impl RunResult {
    pub fn distance_km(&self) -> f64 {
        self.distance_m / 1e3
    }

    /// Net battery output `E_b_out` (kWh).
    pub fn battery_energy_kwh(&self) -> f64 {
        self.ledger.e_b_out / J_PER_KWH
    }
}

/// One decimated trace row: the state at the start of a step and the mean
/// powers over it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub v_ref: f64,
    pub chassis: ChassisState,
    /// Distance driven (m).
    pub s: f64,
    pub y_ref: f64,
    pub delta: f64,
    pub pedals: Pedals,
    pub omega: PerWheel<f64>,
    pub fx: PerWheel<f64>,
    pub fy: PerWheel<f64>,
    pub fz: PerWheel<f64>,
    pub t_m: f64,
    pub omega_m: f64,
    pub soc: f64,
    pub v_b: f64,
    pub i_b: f64,
    pub power: PowerSample,
}

const SCALAR_COLUMNS: [&str; 18] = [
    "time_s", "v_ref", "v_x", "v_y", "psi_dot", "psi", "x", "y", "s", "y_ref", "delta", "accel_pedal", "brake_pedal",
    "t_m", "omega_m", "soc", "v_b", "i_b",
];
const WHEEL_COLUMNS: [&str; 10] = ["omega", "fx", "fy", "fz", "p_in", "p_in_p", "p_rot", "p_loss", "p_out_x", "p_out_y"];
const POWER_COLUMNS: [&str; 10] = [
    "p_maneuver", "p_traction_resultant", "p_lateral", "p_aero", "p_d_out", "p_m_out", "p_m_loss", "p_m_in",
    "p_b_out", "p_b_curtailed",
];

/// Trace column names, in the order of [`TraceRow::values`]. Per-wheel
/// quantities carry a `_lf`, `_rf`, `_lr` or `_rr` suffix.
pub fn trace_columns() -> Vec<String> {
    let mut out: Vec<String> = SCALAR_COLUMNS.iter().map(|c| String::from(*c)).collect();
    for c in WHEEL_COLUMNS {
        for w in Wheel::ALL {
            out.push(alloc::format!("{}_{}", c, w.tag()));
        }
    }
    out.extend(POWER_COLUMNS.iter().map(|c| String::from(*c)));
    out
}

impl TraceRow {
    /// Appends the row in column order to `out`.
    pub fn values(&self, out: &mut Vec<f64>) {
        let c = &self.chassis;
        out.extend_from_slice(&[
            self.time,
            self.v_ref,
            c.v_x,
            c.v_y,
            c.psi_dot,
            c.psi,
            c.x,
            c.y,
            self.s,
            self.y_ref,
            self.delta,
            self.pedals.accel,
            self.pedals.brake,
            self.t_m,
            self.omega_m,
            self.soc,
            self.v_b,
            self.i_b,
        ]);
        let wp = &self.power.wheel;
        let per_wheel: [&dyn Fn(Wheel) -> f64; 10] = [
            &|w| self.omega[w],
            &|w| self.fx[w],
            &|w| self.fy[w],
            &|w| self.fz[w],
            &|w| wp[w].input,
            &|w| wp[w].input_p,
            &|w| wp[w].rot,
            &|w| wp[w].loss,
            &|w| wp[w].out_x,
            &|w| wp[w].out_y,
        ];
        for f in per_wheel {
            out.extend(Wheel::ALL.iter().map(|&w| f(w)));
        }
        let p = &self.power;
        out.extend_from_slice(&[
            p.maneuver,
            p.traction_resultant(),
            p.lateral(),
            p.aero,
            p.d_out,
            p.m_out,
            p.m_loss,
            p.m_in,
            p.b_out,
            p.b_curtailed,
        ]);
    }
}

/// Runs `s` without a trace.
pub fn run(s: &Scenario) -> Result<RunResult, SimError> {
    run_traced(s, |_| {})
}

/// Runs `s`, handing a [`TraceRow`] to `trace` every `trace_interval`.
///
/// Each step: driver → pedal/torque mapping → implicit wheel spin against the
/// tires → chassis step → standstill hold → battery → ledger.
pub fn run_traced(s: &Scenario, mut trace: impl FnMut(&TraceRow)) -> Result<RunResult, SimError> {
    s.validate()?;
    let vp = &s.vehicle;
    let pt = &s.powertrain;
    let dt = s.dt;
    let cycle = if s.to_depletion { s.cycle.clone() } else { s.cycle.repeated(s.repetitions) };
    let reference = schedule_lane_changes(&cycle, s.lane_change_interval, &s.lane);
    let lap_offset = reference.segments.iter().map(|c| c.delta_y).sum::<f64>();
    let period = cycle.duration();
    let steps_per_lap = math::round(period / dt) as u64;
    let trace_every = (math::round(s.trace_interval / dt) as u64).max(1);
    let fz = vp.static_loads();
    let tire_of = |w: Wheel| if w.is_front() { &s.tire_front } else { &s.tire_rear };

    let v0 = cycle.speed_at(0.0);
    let mut chassis = ChassisState::straight(v0);
    let mut omega = PerWheel::splat(v0 / vp.r_w);
    let spin_energy = |om: &PerWheel<f64>| 0.5 * vp.j_w * om.0.iter().map(|o| o * o).sum::<f64>();
    let mut battery = s.battery.initial_state();
    let mut ledger = EnergyLedger::new(dt, pt.eta_diff, pt.eta_inv, chassis.kinetic_energy(vp), spin_energy(&omega));
    let mut longitudinal = LongitudinalController::new(s.driver);
    let mut lateral = LateralController::new(s.driver);
    let mut loss_share = LossShare::default();

    let mut distance = 0.0;
    let mut sq_speed_error = 0.0;
    let mut peak_lateral_error = 0.0f64;
    let mut depleted = false;
    let (mut lap, mut lap_s0) = (0u32, 0.0);
    let mut k: u64 = 0;

    loop {
        let k_lap = k - lap as u64 * steps_per_lap;
        if k_lap >= steps_per_lap {
            if !s.to_depletion || lap + 1 >= MAX_DEPLETION_LAPS {
                break;
            }
            lap += 1;
            lap_s0 = distance;
            continue;
        }
        let time = k as f64 * dt;
        let t_lap = k_lap as f64 * dt;
        let y_offset = lap as f64 * lap_offset;
        let y_ref_at = |arc: f64| y_offset + reference.at(arc - lap_s0).0;

        let v_ref = cycle.speed_at(t_lap);
        let y_ref = y_ref_at(distance);
        sq_speed_error += (v_ref - chassis.v_x) * (v_ref - chassis.v_x);
        peak_lateral_error = peak_lateral_error.max((chassis.y - y_ref).abs());

        let pedals = longitudinal.control(cycle.speed_at(t_lap + s.driver.speed_preview), chassis.v_x, dt);
        let delta = lateral.control_to(&chassis, y_ref_at, distance, dt);
        let cmd = ActuatorCommand { accel_pedal: pedals.accel, brake_pedal: pedals.brake, delta };
        let omega_m = powertrain::motor_speed(&omega, pt);
        let torque = powertrain::motor_torque_command(&cmd, omega_m, s.regen_enabled, pt, &battery);
        let drive = powertrain::driveline_forward(torque.t_m, &omega, pt).t_w;

        let start = chassis.velocity();
        let contact_v = dynamics::wheel_velocities(&start, delta, vp);
        let mut torques = WheelTorques { drive, ..Default::default() };
        let mut fx = PerWheel::splat(0.0);
        let mut fy = PerWheel::splat(0.0);
        let mut omega_next = omega;
        for w in Wheel::ALL {
            let contact = Contact { v_long: contact_v[w].long, v_lat: contact_v[w].lat, fz: fz[w], r_w: vp.r_w, params: tire_of(w) };
            let rolling = tire::rolling_resistance(fz[w], omega[w], vp.f_r, vp.r_w, tire_of(w).eps_v);
            let spin = dynamics::implicit_spin(
                omega[w],
                drive[w],
                torque.brake[w],
                rolling,
                vp.j_w,
                vp.r_w,
                dt,
                contact.fx_bound(),
                |o| contact.fx_and_slope(o),
            );
            torques.brake[w] = spin.brake;
            torques.rolling[w] = rolling;
            fx[w] = spin.fx;
            fy[w] = contact.force(spin.omega_next).1;
            omega_next[w] = spin.omega_next;
        }
        let body = dynamics::aggregate_forces(&fx, &fy, delta, vp.drag_force(chassis.v_x), vp);
        let mut next = dynamics::step(&chassis, &body, vp, dt).map_err(|_| SimError::NonFiniteState { time })?;

        let mid = start.midpoint(&next.velocity());
        let omega_mean = PerWheel::from_fn(|w| 0.5 * (omega[w] + omega_next[w]));
        let omega_m_mean = powertrain::motor_speed(&omega_mean, pt);
        distance += dt * mid.v_x;

        // Hold at rest: the brake would otherwise rock the vehicle back and
        // forth around zero speed.
        if next.v_x < 0.0 || (pedals.brake > 0.0 && next.v_x < STANDSTILL_SPEED) {
            let ke = next.kinetic_energy(vp);
            let spin = spin_energy(&omega_next);
            next.v_x = 0.0;
            next.v_y = 0.0;
            next.psi_dot = 0.0;
            omega_next = PerWheel::splat(0.0);
            ledger.record_hold(ke, spin);
        }

        let motor = powertrain::motor_electrical(torque.t_m, omega_m_mean, pt);
        let p_b_demand = powertrain::battery_power_demand(motor.p_in, torque.t_m, pt.eta_inv);
        battery = match powertrain::battery_step(motor.p_in, torque.t_m, pt.eta_inv, pt.p_regen_max, &battery, &s.battery, dt) {
            Ok(b) => b,
            Err(SimError::SocDepleted { .. }) if s.to_depletion => {
                depleted = true;
                break;
            }
            Err(SimError::SocDepleted { .. }) => return Err(SimError::SocDepleted { time, distance_m: distance }),
            Err(e) => return Err(e),
        };

        let mean_contact_v = dynamics::wheel_velocities(&mid, delta, vp);
        let sample = energy::power_sample(&StepInputs {
            time,
            body: &body,
            velocity: mid,
            wheel_velocity: &mean_contact_v,
            fx: &fx,
            fy: &fy,
            torques: &torques,
            omega: &omega_mean,
            r_w: vp.r_w,
            t_m: torque.t_m,
            omega_m: omega_m_mean,
            eta_diff: pt.eta_diff,
            motor,
            p_b_demand,
            p_b: battery.power(),
        });
        ledger.accumulate(&sample, dt)?;
        loss_share.push_sample(&sample);

        if k.is_multiple_of(trace_every) {
            trace(&TraceRow {
                time,
                v_ref,
                chassis,
                s: distance - dt * mid.v_x,
                y_ref,
                delta,
                pedals,
                omega,
                fx,
                fy,
                fz,
                t_m: torque.t_m,
                omega_m: omega_m_mean,
                soc: battery.soc,
                v_b: battery.v_b,
                i_b: battery.i_b,
                power: sample,
            });
        }

        chassis = next;
        omega = omega_next;
        k += 1;
    }

    ledger.set_final_state(chassis.kinetic_energy(vp), spin_energy(&omega));
    Ok(RunResult {
        name: s.name.clone(),
        regen_enabled: s.regen_enabled,
        lane_change_interval: s.lane_change_interval,
        lane_changes: reference.segments.len(),
        distance_m: distance,
        duration_s: k as f64 * dt,
        rms_speed_error: if k > 0 { math::sqrt(sq_speed_error / k as f64) } else { 0.0 },
        peak_lateral_error,
        final_soc: battery.soc,
        depleted,
        loss_share,
        ledger,
    })
}
