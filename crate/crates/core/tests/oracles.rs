//! Core routines checked against independent closed-form or brute-force
//! evaluations.

use evlat_core::dynamics::{aggregate_forces, step, wheel_velocities, BodyForces, ChassisState, VehicleParams};
use evlat_core::powertrain::terminal_current;
use evlat_core::tire::{tire_force, SlipState, TireParams};
use evlat_core::{PerWheel, Wheel};
use proptest::prelude::*;

fn cross_z(r: [f64; 3], f: [f64; 3]) -> f64 {
    r[0] * f[1] - r[1] * f[0]
}

/// Rotation about z applied as a full 3×3 matrix product.
fn rotate(delta: f64, v: [f64; 3]) -> [f64; 3] {
    let m = [[delta.cos(), -delta.sin(), 0.0], [delta.sin(), delta.cos(), 0.0], [0.0, 0.0, 1.0]];
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

fn brute_force(fx: &[f64; 4], fy: &[f64; 4], delta: f64, f_a: f64, p: &VehicleParams) -> (f64, f64, f64, f64) {
    let points = [[p.a, p.l, 0.0], [p.a, -p.l, 0.0], [-p.b, p.l, 0.0], [-p.b, -p.l, 0.0]];
    let (mut sx, mut sy, mut mz, mut scale) = (0.0, 0.0, 0.0, 0.0_f64);
    for k in 0..4 {
        let local = [fx[k], fy[k], 0.0];
        let f = if k < 2 { rotate(delta, local) } else { local };
        sx += f[0];
        sy += f[1];
        let m = cross_z(points[k], f);
        mz += m;
        scale = scale.max(f[0].abs()).max(f[1].abs()).max(m.abs());
    }
    (sx - f_a, sy, mz, scale.max(f_a.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn aggregate_forces_matches_cross_product_oracle(
        fx in prop::array::uniform4(-8e3..8e3f64),
        fy in prop::array::uniform4(-8e3..8e3f64),
        delta in -0.6..0.6f64,
        f_a in 0.0..800.0f64,
        a in 0.8..1.8f64,
        b in 0.8..1.8f64,
        l in 0.6..1.0f64,
    ) {
        let p = VehicleParams { a, b, l, ..Default::default() };
        let got = aggregate_forces(&PerWheel(fx), &PerWheel(fy), delta, f_a, &p);
        let (ox, oy, om, scale) = brute_force(&fx, &fy, delta, f_a, &p);
        let tol = 1e-12 * scale.max(1.0);
        prop_assert!((got.f_x - ox).abs() <= tol, "f_x {} vs {}", got.f_x, ox);
        prop_assert!((got.f_y - oy).abs() <= tol, "f_y {} vs {}", got.f_y, oy);
        prop_assert!((got.m_z - om).abs() <= tol * 2.0, "m_z {} vs {}", got.m_z, om);
    }

    #[test]
    fn battery_current_matches_quadratic_root(
        v_oc in 250.0..450.0f64,
        r_int in 0.01..0.3f64,
        frac in -1.0..0.95f64,
    ) {
        // stay inside the solvable region p < v²/(4r)
        let p = frac * v_oc * v_oc / (4.0 * r_int);
        let oracle = (v_oc - (v_oc * v_oc - 4.0 * r_int * p).sqrt()) / (2.0 * r_int);
        let got = terminal_current(p, v_oc, r_int).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-9 * oracle.abs().max(1.0), "{got} vs {oracle}");
    }

    #[test]
    fn held_step_work_equals_kinetic_energy_change(
        v_x in 0.0..40.0f64,
        v_y in -2.0..2.0f64,
        psi_dot in -0.8..0.8f64,
        f_x in -1e4..1e4f64,
        f_y in -1e4..1e4f64,
        m_z in -5e3..5e3f64,
        dt in 1e-4..1e-2f64,
    ) {
        let p = VehicleParams::default();
        let c0 = ChassisState { v_x, v_y, psi_dot, ..Default::default() };
        let body = BodyForces { f_x, f_y, m_z, f_a: 0.0 };
        let c1 = step(&c0, &body, &p, dt).unwrap();
        let mid = c0.velocity().midpoint(&c1.velocity());
        let work = dt * (f_x * mid.v_x + f_y * mid.v_y + m_z * mid.psi_dot);
        let d_ke = c1.kinetic_energy(&p) - c0.kinetic_energy(&p);
        let scale = c0.kinetic_energy(&p).max(1.0);
        prop_assert!((d_ke - work).abs() <= 1e-12 * scale, "{d_ke} vs {work}");
    }
}

/// Textbook Dugoff evaluation: λ = μ Fz / (2 √(fx0² + fy0²)), forces scaled
/// by λ(2 − λ) when λ < 1.
fn dugoff_oracle(kappa: f64, alpha: f64, fz: f64, c_kappa: f64, c_alpha: f64, mu: f64) -> (f64, f64) {
    let fx0 = c_kappa * kappa;
    let fy0 = -c_alpha * alpha.tan();
    let r = fx0.hypot(fy0);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let lambda = mu * fz / (2.0 * r);
    let f = if lambda < 1.0 { lambda * (2.0 - lambda) } else { 1.0 };
    (fx0 * f, fy0 * f)
}

#[test]
fn tire_force_matches_dugoff_oracle_on_slip_grid() {
    let p = TireParams::default();
    let fz = 4000.0;
    let n = 50;
    for i in 0..n {
        for j in 0..n {
            let kappa = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let alpha = -0.5 + 1.0 * j as f64 / (n - 1) as f64;
            let (fx, fy) = tire_force(SlipState { kappa, alpha }, fz, &p);
            let (ox, oy) = dugoff_oracle(kappa, alpha, fz, p.c_kappa, p.c_alpha, p.mu);
            let scale = ox.hypot(oy).max(1.0);
            assert!((fx - ox).abs() <= 1e-12 * scale, "fx at ({kappa}, {alpha}): {fx} vs {ox}");
            assert!((fy - oy).abs() <= 1e-12 * scale, "fy at ({kappa}, {alpha}): {fy} vs {oy}");
            assert!(fx.hypot(fy) <= p.mu * fz * (1.0 + 1e-12));
        }
    }
}

#[test]
fn steady_cornering_matches_linear_closed_form() {
    let p = VehicleParams { drag_coeff_area: 0.0, f_r: 0.0, ..Default::default() };
    let tp = TireParams::default();
    let fz = p.static_loads();
    let (u, delta, dt) = (15.0, 0.02, 1e-3);

    let mut c = ChassisState::straight(u);
    let mut samples = Vec::new();
    for k in 0..20_000 {
        let wv = wheel_velocities(&c.velocity(), delta, &p);
        let fy = PerWheel::from_fn(|w: Wheel| {
            let alpha = wv[w].lat.atan2(wv[w].long.abs());
            tire_force(SlipState { kappa: 0.0, alpha }, fz[w], &tp).1
        });
        let body = aggregate_forces(&PerWheel::splat(0.0), &fy, delta, 0.0, &p);
        c = step(&c, &body, &p, dt).unwrap();
        c.v_x = u;
        if k >= 15_000 && k % 500 == 0 {
            samples.push(c);
        }
    }

    // axle cornering stiffness of two wheels; understeer gradient from static loads
    let (cf, cr) = (2.0 * tp.c_alpha, 2.0 * tp.c_alpha);
    let wb = p.wheelbase();
    let k_us = p.m_veh / wb * (p.b / cf - p.a / cr);
    let psi_dot = u * delta / (wb + k_us * u * u);
    assert!((c.psi_dot - psi_dot).abs() <= 2e-3 * psi_dot, "{} vs {}", c.psi_dot, psi_dot);

    let first = samples[0].psi_dot;
    assert!(samples.iter().all(|s| (s.psi_dot - first).abs() < 1e-9 * first));

    // radius from three trajectory points vs speed over yaw rate
    let (a, b, d) = (samples[0], samples[4], samples[9]);
    let side = |p: ChassisState, q: ChassisState| (p.x - q.x).hypot(p.y - q.y);
    let (ab, bd, da) = (side(a, b), side(b, d), side(d, a));
    let area = 0.5 * ((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y)).abs();
    let radius = ab * bd * da / (4.0 * area);
    let speed = c.v_x.hypot(c.v_y);
    assert!((radius - speed / c.psi_dot).abs() <= 1e-4 * radius, "{radius} vs {}", speed / c.psi_dot);
}
