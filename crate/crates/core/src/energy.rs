//! Battery-to-maneuver energy ledger.
//!
//! Every integrator step contributes one [`PowerSample`]: the loads held over
//! the step times the mean of the start and end velocities. This is the
//! trapezoidal rule for the piecewise-linear velocities of the integrator, and
//! with it the balance identities below hold to roundoff:
//!
//! ```text
//! E_w_m                 = Σ_wheels (E_out_x + E_out_y)
//! E_in                  = E_rot + E_out_x + E_loss             (each wheel)
//! E_d_out               = E_in_p(lr) + E_in_p(rr)
//! E_d_out               = η_diff E_m_out   (traction),  E_m_out / η_diff   (regen)
//! E_m_in                = η_inv E_b_out    (traction),  E_b_out / η_inv    (regen)
//! E_w_m − E_aero − E_hold = ΔKE
//! ```
//!
//! `E_w_m` is the work of the tire resultant. Aerodynamic drag acts on the body
//! rather than through a wheel, so it is booked separately as `E_aero`.
//! `E_hold` is the kinetic energy removed when the vehicle is held at standstill.

use alloc::vec::Vec;

use crate::dynamics::{BodyForces, BodyVelocity, WheelTorques, WheelVelocity};
use crate::error::SimError;
use crate::math;
use crate::powertrain::{diff_factor, MotorPower};
use crate::wheel::{PerWheel, Wheel};

/// Mean powers of one wheel over a step (W).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelPower {
    /// `(T_w − T_b − T_R) ω`
    pub input: f64,
    /// `T_w ω`, the powertrain share of the input.
    pub input_p: f64,
    /// `(T_w − T_b − T_R − F^x r_w) ω`
    pub rot: f64,
    /// `F^x (r_w ω − v^x)`
    pub loss: f64,
    pub out_x: f64,
    pub out_y: f64,
}

impl WheelPower {
    pub fn out(&self) -> f64 {
        self.out_x + self.out_y
    }
}

/// Mean powers over one step starting at `time` (W).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PowerSample {
    pub time: f64,
    pub wheel: PerWheel<WheelPower>,
    /// Work rate of the tire resultant on the body.
    pub maneuver: f64,
    /// Drag power, positive when dissipating.
    pub aero: f64,
    pub d_out: f64,
    pub m_out: f64,
    pub m_loss: f64,
    pub m_in: f64,
    pub b_out: f64,
    /// Charging power the pack refused (W, ≤ 0 while charging is curtailed).
    pub b_curtailed: f64,
    /// Motor torque; its sign decides the traction/regen gating.
    pub t_m: f64,
}

impl PowerSample {
    /// Resultant wheel traction power `Σ F^x v^x`.
    pub fn traction_resultant(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.out_x).sum()
    }

    pub fn lateral(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.out_y).sum()
    }

    pub fn is_traction(&self) -> bool {
        self.t_m >= 0.0
    }
}

/// Everything a step exposes to the ledger. Velocities are step means; forces
/// and torques are the values held over the step.
#[derive(Clone, Copy, Debug)]
pub struct StepInputs<'a> {
    pub time: f64,
    pub body: &'a BodyForces,
    pub velocity: BodyVelocity,
    pub wheel_velocity: &'a PerWheel<WheelVelocity>,
    pub fx: &'a PerWheel<f64>,
    pub fy: &'a PerWheel<f64>,
    pub torques: &'a WheelTorques,
    pub omega: &'a PerWheel<f64>,
    pub r_w: f64,
    pub t_m: f64,
    pub omega_m: f64,
    pub eta_diff: f64,
    pub motor: MotorPower,
    /// Battery power requested by the inverter and actually delivered (W).
    pub p_b_demand: f64,
    pub p_b: f64,
}

pub fn power_sample(s: &StepInputs<'_>) -> PowerSample {
    let v = s.velocity;
    let b = s.body;
    let wheel = PerWheel::from_fn(|w| {
        let om = s.omega[w];
        let fx = s.fx[w];
        let net = s.torques.net(w);
        let vl = s.wheel_velocity[w];
        WheelPower {
            input: net * om,
            input_p: s.torques.drive[w] * om,
            rot: (net - fx * s.r_w) * om,
            loss: fx * (s.r_w * om - vl.long),
            out_x: fx * vl.long,
            out_y: s.fy[w] * vl.lat,
        }
    });
    let m_out = s.t_m * s.omega_m;
    PowerSample {
        time: s.time,
        wheel,
        maneuver: (b.f_x + b.f_a) * v.v_x + b.f_y * v.v_y + b.m_z * v.psi_dot,
        aero: b.f_a * v.v_x,
        d_out: diff_factor(s.t_m, s.eta_diff) * m_out,
        m_out,
        m_loss: s.motor.p_loss,
        m_in: s.motor.p_in,
        b_out: s.p_b,
        b_curtailed: s.p_b - s.p_b_demand,
        t_m: s.t_m,
    }
}

/// Cumulative energies of one wheel (J).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WheelEnergy {
    pub e_in: f64,
    pub e_in_p: f64,
    pub e_rot: f64,
    pub e_loss: f64,
    pub e_out_x: f64,
    pub e_out_y: f64,
}

impl WheelEnergy {
    pub fn e_out(&self) -> f64 {
        self.e_out_x + self.e_out_y
    }
}

/// Driveline energies restricted to steps of one torque sign (J).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GatedEnergy {
    pub e_d_out: f64,
    pub e_m_out: f64,
    pub e_m_in: f64,
    pub e_b_out: f64,
    pub e_b_curtailed: f64,
}

impl GatedEnergy {
    fn add(&mut self, p: &PowerSample, dt: f64) {
        self.e_d_out += p.d_out * dt;
        self.e_m_out += p.m_out * dt;
        self.e_m_in += p.m_in * dt;
        self.e_b_out += p.b_out * dt;
        self.e_b_curtailed += p.b_curtailed * dt;
    }
}

/// Running energy integrals of one simulation (J).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnergyLedger {
    pub dt: f64,
    pub eta_diff: f64,
    pub eta_inv: f64,
    pub steps: u64,
    pub e_w_m: f64,
    pub e_aero: f64,
    /// Chassis kinetic energy removed by standstill holds.
    pub e_hold: f64,
    /// Wheel spin energy removed by standstill holds.
    pub e_hold_spin: f64,
    pub wheel: PerWheel<WheelEnergy>,
    pub e_d_out: f64,
    pub e_m_out: f64,
    pub e_m_in: f64,
    pub e_m_loss: f64,
    pub e_b_out: f64,
    pub traction: GatedEnergy,
    pub regen: GatedEnergy,
    pub p_b_min: f64,
    pub p_b_max: f64,
    pub ke_initial: f64,
    pub ke_final: f64,
    pub spin_initial: f64,
    pub spin_final: f64,
}

impl EnergyLedger {
    /// Empty ledger for a run on grid `dt` starting with chassis kinetic
    /// energy `ke` and total wheel spin energy `spin`.
    pub fn new(dt: f64, eta_diff: f64, eta_inv: f64, ke: f64, spin: f64) -> Self {
        EnergyLedger {
            dt,
            eta_diff,
            eta_inv,
            steps: 0,
            e_w_m: 0.0,
            e_aero: 0.0,
            e_hold: 0.0,
            e_hold_spin: 0.0,
            wheel: PerWheel::default(),
            e_d_out: 0.0,
            e_m_out: 0.0,
            e_m_in: 0.0,
            e_m_loss: 0.0,
            e_b_out: 0.0,
            traction: GatedEnergy::default(),
            regen: GatedEnergy::default(),
            p_b_min: f64::INFINITY,
            p_b_max: f64::NEG_INFINITY,
            ke_initial: ke,
            ke_final: ke,
            spin_initial: spin,
            spin_final: spin,
        }
    }

    /// Adds one step. `dt` must be the grid the ledger was opened on.
    pub fn accumulate(&mut self, p: &PowerSample, dt: f64) -> Result<(), SimError> {
        if dt != self.dt {
            return Err(SimError::GridMismatch { expected: self.dt, got: dt });
        }
        self.steps += 1;
        self.e_w_m += p.maneuver * dt;
        self.e_aero += p.aero * dt;
        for w in Wheel::ALL {
            let (e, q) = (&mut self.wheel[w], &p.wheel[w]);
            e.e_in += q.input * dt;
            e.e_in_p += q.input_p * dt;
            e.e_rot += q.rot * dt;
            e.e_loss += q.loss * dt;
            e.e_out_x += q.out_x * dt;
            e.e_out_y += q.out_y * dt;
        }
        self.e_d_out += p.d_out * dt;
        self.e_m_out += p.m_out * dt;
        self.e_m_in += p.m_in * dt;
        self.e_m_loss += p.m_loss * dt;
        self.e_b_out += p.b_out * dt;
        if p.is_traction() {
            self.traction.add(p, dt);
        } else {
            self.regen.add(p, dt);
        }
        self.p_b_min = self.p_b_min.min(p.b_out);
        self.p_b_max = self.p_b_max.max(p.b_out);
        Ok(())
    }

    /// Books kinetic energy removed by holding the vehicle at rest.
    pub fn record_hold(&mut self, chassis: f64, spin: f64) {
        self.e_hold += chassis;
        self.e_hold_spin += spin;
    }

    pub fn set_final_state(&mut self, ke: f64, spin: f64) {
        self.ke_final = ke;
        self.spin_final = spin;
    }

    pub fn e_out_total(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.e_out()).sum()
    }

    pub fn e_loss_total(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.e_loss).sum()
    }

    pub fn e_rot_total(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.e_rot).sum()
    }

    /// Resultant wheel traction energy `Σ E_out_x`.
    pub fn e_traction_resultant(&self) -> f64 {
        self.wheel.0.iter().map(|w| w.e_out_x).sum()
    }
}

/// Smallest energy scale used to normalise residuals (J).
pub const RESIDUAL_FLOOR: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / scale`, with `scale` the largest magnitude among the
    /// identity's terms and [`RESIDUAL_FLOOR`].
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BalanceReport {
    pub tol: f64,
    pub checks: Vec<IdentityCheck>,
}

impl BalanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.flagged)
    }

    pub fn worst(&self) -> Option<&IdentityCheck> {
        self.checks.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, lhs: f64, rhs: f64, terms: &[f64], tol: f64) -> IdentityCheck {
    let scale = terms.iter().fold(RESIDUAL_FLOOR, |m, t| m.max(t.abs()));
    let residual = (lhs - rhs).abs() / scale;
    IdentityCheck { name, lhs, rhs, residual, flagged: residual.is_nan() || residual > tol }
}

/// Residuals of every balance identity of the ledger; anything above `tol`
/// (or not finite) is flagged.
pub fn balance_report(l: &EnergyLedger, tol: f64) -> BalanceReport {
    let mut checks = Vec::new();
    let e_out = l.e_out_total();
    checks.push(check("maneuver_sum", l.e_w_m, e_out, &[l.e_w_m, e_out], tol));

    for w in Wheel::ALL {
        let e = &l.wheel[w];
        let rhs = e.e_rot + e.e_out_x + e.e_loss;
        let name = match w {
            Wheel::LeftFront => "wheel_lf",
            Wheel::RightFront => "wheel_rf",
            Wheel::LeftRear => "wheel_lr",
            Wheel::RightRear => "wheel_rr",
        };
        checks.push(check(name, e.e_in, rhs, &[e.e_in, e.e_rot, e.e_out_x, e.e_loss], tol));
    }

    let split = l.wheel[Wheel::LeftRear].e_in_p + l.wheel[Wheel::RightRear].e_in_p;
    checks.push(check("diff_split", l.e_d_out, split, &[l.e_d_out, split], tol));

    let t = &l.traction;
    let rhs = l.eta_diff * t.e_m_out;
    checks.push(check("diff_traction", t.e_d_out, rhs, &[t.e_d_out, rhs], tol));
    let r = &l.regen;
    let rhs = r.e_m_out / l.eta_diff;
    checks.push(check("diff_regen", r.e_d_out, rhs, &[r.e_d_out, rhs], tol));

    let rhs = l.e_m_out + l.e_m_loss;
    checks.push(check("motor", l.e_m_in, rhs, &[l.e_m_in, l.e_m_out, l.e_m_loss], tol));

    // what the inverter asked the pack for, curtailment added back
    let t_b = t.e_b_out - t.e_b_curtailed;
    let rhs = l.eta_inv * t_b;
    checks.push(check("inverter_traction", t.e_m_in, rhs, &[t.e_m_in, rhs], tol));
    let r_b = r.e_b_out - r.e_b_curtailed;
    let rhs = r_b / l.eta_inv;
    checks.push(check("inverter_regen", r.e_m_in, rhs, &[r.e_m_in, rhs], tol));

    let dke = l.ke_final - l.ke_initial;
    let lhs = l.e_w_m - l.e_aero - l.e_hold;
    checks.push(check("kinetic", lhs, dke, &[l.e_w_m, l.e_aero, l.e_hold, dke], tol));

    let rot = l.e_rot_total();
    let dspin = l.spin_final - l.spin_initial;
    let lhs = rot - l.e_hold_spin;
    checks.push(check("rotational", lhs, dspin, &[rot, l.e_hold_spin, dspin], tol));

    BalanceReport { tol, checks }
}

/// Signs of the cumulative terms the analysis interprets.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SignSummary {
    /// Sign (−1, 0, 1) of cumulative `E_out_x` per wheel.
    pub out_x: PerWheel<i8>,
    pub front_dissipative: bool,
    pub rear_tractive: bool,
    pub battery_net_discharge: bool,
    /// Whether the regen steps returned energy to the pack, `None` without any.
    pub regen_charged: Option<bool>,
    /// Battery power never went negative.
    pub battery_never_charged: bool,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub fn classify_signs(l: &EnergyLedger) -> SignSummary {
    let out_x = l.wheel.map(|_, w| sign(w.e_out_x));
    let regen_charged = if l.regen.e_b_out != 0.0 || l.regen.e_m_out != 0.0 { Some(l.regen.e_b_out < 0.0) } else { None };
    SignSummary {
        out_x,
        front_dissipative: out_x[Wheel::LeftFront] < 0 && out_x[Wheel::RightFront] < 0,
        rear_tractive: out_x[Wheel::LeftRear] > 0 && out_x[Wheel::RightRear] > 0,
        battery_net_discharge: l.e_b_out > 0.0,
        regen_charged,
        battery_never_charged: l.steps == 0 || l.p_b_min >= 0.0,
    }
}

/// Distribution of the per-step share of battery power spent on tire slip and
/// wheel spin, on a fixed grid so that memory stays bounded.
#[derive(Clone, Debug, PartialEq)]
pub struct LossShare {
    lo: f64,
    width: f64,
    bins: Vec<u64>,
    below: u64,
    above: u64,
    count: u64,
}

impl Default for LossShare {
    fn default() -> Self {
        LossShare::new(-1.0, 1.0, 20_000)
    }
}

impl LossShare {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        LossShare { lo, width: (hi - lo) / bins as f64, bins: alloc::vec![0; bins], below: 0, above: 0, count: 0 }
    }

    pub fn push(&mut self, share: f64) {
        self.count += 1;
        if share < self.lo {
            self.below += 1;
            return;
        }
        let idx = ((share - self.lo) / self.width) as usize;
        match self.bins.get_mut(idx) {
            Some(b) => *b += 1,
            None => self.above += 1,
        }
    }

    /// Adds the share of a traction step; other steps are ignored.
    pub fn push_sample(&mut self, p: &PowerSample) {
        if p.t_m > 0.0 && p.b_out > 0.0 {
            let spent: f64 = p.wheel.0.iter().map(|w| w.loss + w.rot).sum();
            self.push(spent / p.b_out);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Upper edge of the bin holding quantile `q` (so never an underestimate
    /// within the grid), `∞` if it falls above the grid.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let rank = math::ceil(q.clamp(0.0, 1.0) * self.count as f64).max(1.0) as u64;
        let mut seen = self.below;
        if seen >= rank {
            return Some(self.lo);
        }
        for (i, b) in self.bins.iter().enumerate() {
            seen += b;
            if seen >= rank {
                return Some(self.lo + (i + 1) as f64 * self.width);
            }
        }
        Some(f64::INFINITY)
    }
}
