//! Planar dual-track rigid body with four spinning wheels.
//!
//! Body frame: `x` forward, `y` left, yaw positive counter-clockwise. Wheel
//! contact points sit at `(a, ±l)` (front) and `(-b, ±l)` (rear); the front
//! wheels are steered by `delta`.
//!
//! Equations of motion:
//!
//! ```text
//! m (v̇x − ψ̇ vy) = Fx          Iz ψ̈ = Mz
//! m (v̇y + ψ̇ vx) = Fy          Jw ω̇ = Tw − Tb − TR − Fx_w rw
//! ```
//!
//! One [`step`] holds every force and torque constant over `dt`. The
//! gyroscopic coupling is solved with the averaged velocities, so the discrete
//! kinetic energy change equals held force times mean velocity exactly. The
//! energy ledger relies on this.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SimError};
use crate::math;
use crate::wheel::{PerWheel, Wheel};
use crate::GRAVITY;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct VehicleParams {
    /// COG to front axle (m).
    pub a: f64,
    /// COG to rear axle (m).
    pub b: f64,
    /// Half track width (m).
    pub l: f64,
    /// Wheel radius (m), same for all wheels.
    pub r_w: f64,
    /// Vehicle mass (kg).
    pub m_veh: f64,
    /// Yaw inertia (kg m²).
    pub i_z: f64,
    /// Spin inertia of one wheel (kg m²).
    pub j_w: f64,
    /// Drag coefficient times frontal area (m²).
    pub drag_coeff_area: f64,
    /// Air density (kg/m³).
    pub air_density: f64,
    /// Rolling-resistance coefficient.
    pub f_r: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            a: 1.2,
            b: 1.4,
            l: 0.8,
            r_w: 0.31,
            m_veh: 1600.0,
            i_z: 2500.0,
            j_w: 1.5,
            drag_coeff_area: 0.72,
            air_density: 1.2,
            f_r: 0.01,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("a", self.a),
            ("b", self.b),
            ("l", self.l),
            ("r_w", self.r_w),
            ("m_veh", self.m_veh),
            ("i_z", self.i_z),
            ("j_w", self.j_w),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be positive"));
            }
        }
        let non_negative = [
            ("drag_coeff_area", self.drag_coeff_area),
            ("air_density", self.air_density),
            ("f_r", self.f_r),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ParamError::new(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn wheelbase(&self) -> f64 {
        self.a + self.b
    }

    /// Contact point of `w` relative to the COG in the body frame.
    pub fn position(&self, w: Wheel) -> (f64, f64) {
        let x = if w.is_front() { self.a } else { -self.b };
        let y = if w.is_left() { self.l } else { -self.l };
        (x, y)
    }

    /// Static vertical loads; no load transfer.
    pub fn static_loads(&self) -> PerWheel<f64> {
        let weight = self.m_veh * GRAVITY;
        let wb = self.wheelbase();
        let front = weight * self.b / (2.0 * wb);
        let rear = weight * self.a / (2.0 * wb);
        PerWheel::from_fn(|w| if w.is_front() { front } else { rear })
    }

    /// Aerodynamic drag opposing forward motion (N).
    pub fn drag_force(&self, v_x: f64) -> f64 {
        0.5 * self.air_density * self.drag_coeff_area * v_x * v_x.abs()
    }
}

/// Planar rigid-body state of the chassis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChassisState {
    /// Longitudinal velocity (m/s).
    pub v_x: f64,
    /// Lateral velocity (m/s).
    pub v_y: f64,
    /// Yaw rate (rad/s).
    pub psi_dot: f64,
    /// Heading (rad).
    pub psi: f64,
    /// Inertial position (m).
    pub x: f64,
    pub y: f64,
}

impl ChassisState {
    pub fn straight(v_x: f64) -> Self {
        ChassisState { v_x, ..Default::default() }
    }

    pub fn velocity(&self) -> BodyVelocity {
        BodyVelocity { v_x: self.v_x, v_y: self.v_y, psi_dot: self.psi_dot }
    }

    pub fn kinetic_energy(&self, p: &VehicleParams) -> f64 {
        0.5 * p.m_veh * (self.v_x * self.v_x + self.v_y * self.v_y) + 0.5 * p.i_z * self.psi_dot * self.psi_dot
    }

    pub fn is_finite(&self) -> bool {
        [self.v_x, self.v_y, self.psi_dot, self.psi, self.x, self.y]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Body-frame velocity triple at the COG.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BodyVelocity {
    pub v_x: f64,
    pub v_y: f64,
    pub psi_dot: f64,
}

impl BodyVelocity {
    pub fn midpoint(&self, other: &BodyVelocity) -> BodyVelocity {
        BodyVelocity {
            v_x: 0.5 * (self.v_x + other.v_x),
            v_y: 0.5 * (self.v_y + other.v_y),
            psi_dot: 0.5 * (self.psi_dot + other.psi_dot),
        }
    }
}

/// Wheel spin speeds (rad/s).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelState {
    pub omega: PerWheel<f64>,
}

impl WheelState {
    pub fn rolling(v_x: f64, r_w: f64) -> Self {
        WheelState { omega: PerWheel::splat(v_x / r_w) }
    }
}

/// Contact-point velocity in the wheel frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelVelocity {
    pub long: f64,
    pub lat: f64,
}

/// Wheel-frame tire forces and vertical loads (N).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelForces {
    pub fx: PerWheel<f64>,
    pub fy: PerWheel<f64>,
    pub fz: PerWheel<f64>,
}

/// Resultants at the COG. `f_x` already has the drag `f_a` subtracted.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BodyForces {
    pub f_x: f64,
    pub f_y: f64,
    pub m_z: f64,
    pub f_a: f64,
}

/// Torques acting on the wheel spin axes (N m). `brake` and `rolling` resist
/// forward rotation when positive.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelTorques {
    pub drive: PerWheel<f64>,
    pub brake: PerWheel<f64>,
    pub rolling: PerWheel<f64>,
}

impl WheelTorques {
    /// Spin torque before the tire reaction.
    pub fn net(&self, w: Wheel) -> f64 {
        self.drive[w] - self.brake[w] - self.rolling[w]
    }
}

/// Contact velocities of the four wheels, each in its own wheel frame.
pub fn wheel_velocities(v: &BodyVelocity, delta: f64, p: &VehicleParams) -> PerWheel<WheelVelocity> {
    let (s, c) = (math::sin(delta), math::cos(delta));
    PerWheel::from_fn(|w| {
        let (rx, ry) = p.position(w);
        let bx = v.v_x - v.psi_dot * ry;
        let by = v.v_y + v.psi_dot * rx;
        if w.is_front() {
            WheelVelocity { long: bx * c + by * s, lat: -bx * s + by * c }
        } else {
            WheelVelocity { long: bx, lat: by }
        }
    })
}

/// Resultant force and yaw moment of the tire forces, minus drag `f_a`.
///
/// The yaw moment is the sum of `r × F` over the contact points with the
/// front forces rotated into the body frame.
pub fn aggregate_forces(fx: &PerWheel<f64>, fy: &PerWheel<f64>, delta: f64, f_a: f64, p: &VehicleParams) -> BodyForces {
    let (s, c) = (math::sin(delta), math::cos(delta));
    let mut out = BodyForces { f_a, ..Default::default() };
    for w in Wheel::ALL {
        let (bx, by) = if w.is_front() {
            (fx[w] * c - fy[w] * s, fx[w] * s + fy[w] * c)
        } else {
            (fx[w], fy[w])
        };
        let (rx, ry) = p.position(w);
        out.f_x += bx;
        out.f_y += by;
        out.m_z += rx * by - ry * bx;
    }
    out.f_x -= f_a;
    out
}

/// Advances the chassis by one step with all loads held.
///
/// Wheel spin is advanced separately by [`implicit_spin`]. No clamping is
/// applied here; a caller that stops the vehicle must account for the kinetic
/// energy it removes.
pub fn step(chassis: &ChassisState, body: &BodyForces, p: &VehicleParams, dt: f64) -> Result<ChassisState, SimError> {
    let m = p.m_veh;
    let psi_dot_next = chassis.psi_dot + dt * body.m_z / p.i_z;
    let psi_dot_mid = 0.5 * (chassis.psi_dot + psi_dot_next);

    // Gyroscopic terms use mean velocities: a Cayley rotation, energy-neutral.
    let h = 0.5 * dt * psi_dot_mid;
    let rhs_x = chassis.v_x + dt * body.f_x / m + h * chassis.v_y;
    let rhs_y = chassis.v_y + dt * body.f_y / m - h * chassis.v_x;
    let det = 1.0 + h * h;
    let v_x = (rhs_x + h * rhs_y) / det;
    let v_y = (rhs_y - h * rhs_x) / det;

    let psi = chassis.psi + dt * psi_dot_mid;
    let heading = 0.5 * (chassis.psi + psi);
    let (sh, ch) = (math::sin(heading), math::cos(heading));
    let vx_mid = 0.5 * (chassis.v_x + v_x);
    let vy_mid = 0.5 * (chassis.v_y + v_y);
    let next = ChassisState {
        v_x,
        v_y,
        psi_dot: psi_dot_next,
        psi,
        x: chassis.x + dt * (vx_mid * ch - vy_mid * sh),
        y: chassis.y + dt * (vx_mid * sh + vy_mid * ch),
    };
    if !next.is_finite() {
        return Err(SimError::NonFiniteState { time: f64::NAN });
    }
    Ok(next)
}

/// Outcome of the implicit spin update of one wheel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinUpdate {
    pub omega_next: f64,
    /// Tire longitudinal force at `omega_next`.
    pub fx: f64,
    /// Brake torque actually transmitted (≤ the commanded magnitude).
    pub brake: f64,
}

/// Backward-Euler spin update of one wheel against its tire.
///
/// The slip dynamics are far stiffer than any practical step (time constant
/// `Jw v / (Cκ rw²)`, well under a millisecond at low speed), so the tire
/// force is taken at the end-of-step wheel speed. `tire` returns
/// `(fx, dfx/dω)`; `fx_bound` bounds `|fx|`. A brake that would drive the
/// wheel through zero locks it and transmits only the torque needed to hold it.
#[allow(clippy::too_many_arguments)]
pub fn implicit_spin(
    omega: f64,
    drive: f64,
    brake_cmd: f64,
    rolling: f64,
    j_w: f64,
    r_w: f64,
    dt: f64,
    fx_bound: f64,
    tire: impl Fn(f64) -> (f64, f64),
) -> SpinUpdate {
    let brake_cmd = brake_cmd.abs();
    let free = |brake: f64| solve_spin(omega, drive - brake - rolling, j_w, r_w, dt, fx_bound, &tire);

    if brake_cmd == 0.0 {
        let (omega_next, fx) = free(0.0);
        return SpinUpdate { omega_next, fx, brake: 0.0 };
    }

    let direction = if omega > 0.0 {
        1.0
    } else if omega < 0.0 {
        -1.0
    } else {
        // locked: does the brake hold?
        let (fx0, _) = tire(0.0);
        let hold = drive - rolling - fx0 * r_w;
        if hold.abs() <= brake_cmd {
            return SpinUpdate { omega_next: 0.0, fx: fx0, brake: hold };
        }
        hold.signum()
    };

    let (omega_next, fx) = free(direction * brake_cmd);
    if omega_next * direction > 0.0 {
        return SpinUpdate { omega_next, fx, brake: direction * brake_cmd };
    }
    // brake stops the wheel within the step
    let (fx0, _) = tire(0.0);
    let brake = drive - rolling - fx0 * r_w + j_w * omega / dt;
    SpinUpdate { omega_next: 0.0, fx: fx0, brake }
}

/// Root of `J (ω' − ω) − dt (τ − rw fx(ω')) = 0`; the residual is strictly
/// increasing in ω', so a bracketed Newton iteration always converges.
fn solve_spin(
    omega: f64,
    torque: f64,
    j_w: f64,
    r_w: f64,
    dt: f64,
    fx_bound: f64,
    tire: &impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let gain = dt / j_w;
    let mut lo = omega + gain * (torque - r_w * fx_bound);
    let mut hi = omega + gain * (torque + r_w * fx_bound);
    let residual = |w: f64| -> (f64, f64, f64) {
        let (fx, slope) = tire(w);
        (w - omega - gain * (torque - r_w * fx), 1.0 + gain * r_w * slope, fx)
    };

    let (fx_start, _) = tire(omega);
    let mut w = (omega + gain * (torque - r_w * fx_start)).clamp(lo, hi);
    let tol = 1e-13 * (1.0 + omega.abs());
    for _ in 0..100 {
        let (g, dg, fx) = residual(w);
        if g == 0.0 {
            return (w, fx);
        }
        if g > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let mut next = w - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= tol || hi - lo <= tol {
            let fx = tire(next).0;
            return (next, fx);
        }
        w = next;
    }
    (w, tire(w).0)
}
