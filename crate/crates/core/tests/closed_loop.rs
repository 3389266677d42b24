//! Full closed-loop runs on short synthetic cycles.

use evlat_core::energy::{balance_report, classify_signs};
use evlat_core::scenario::{run, run_traced, DriveCycle, Scenario};

fn highway(cruise: f64) -> DriveCycle {
    DriveCycle::new("highway", [(0.0, 0.0), (20.0, cruise), (80.0, cruise), (100.0, 0.0), (102.0, 0.0)]).unwrap()
}

#[test]
fn straight_reference_keeps_the_lane() {
    let mut s = Scenario::new("straight", highway(25.0));
    s.lane_change_interval = 0.0;
    let mut peak = 0.0_f64;
    let r = run_traced(&s, |row| peak = peak.max(row.chassis.y.abs())).unwrap();
    assert_eq!(r.lane_changes, 0);
    assert!(peak < 1e-3, "peak |Y| {peak}");
}

#[test]
fn lane_change_at_highway_speed_is_tracked() {
    let mut s = Scenario::new("change", highway(25.0));
    s.lane_change_interval = 800.0;
    let r = run(&s).unwrap();
    assert!(r.lane_changes >= 1);
    assert!(r.peak_lateral_error < 0.3, "{}", r.peak_lateral_error);
}

#[test]
fn maneuver_energy_equals_sum_of_wheel_outputs() {
    for interval in [0.0, 400.0] {
        let mut s = Scenario::new("sum", highway(20.0));
        s.lane_change_interval = interval;
        let r = run(&s).unwrap();
        let l = &r.ledger;
        assert!((l.e_w_m - l.e_out_total()).abs() <= 1e-3 * l.e_w_m.abs(), "{} vs {}", l.e_w_m, l.e_out_total());
        let report = balance_report(l, 1e-6);
        assert!(report.passed(), "{report:#?}");
    }
}

#[test]
fn rear_drive_signs_and_regen_charging() {
    let mut s = Scenario::new("signs", highway(20.0));
    s.lane_change_interval = 0.0;
    let signs = classify_signs(&run(&s).unwrap().ledger);
    assert!(signs.front_dissipative && signs.rear_tractive);
    assert_eq!(signs.regen_charged, Some(true));

    s.regen_enabled = false;
    let signs = classify_signs(&run(&s).unwrap().ledger);
    assert!(signs.battery_never_charged);
}

#[test]
fn straight_run_has_no_lateral_power() {
    let mut s = Scenario::new("straight", highway(20.0));
    s.lane_change_interval = 0.0;
    let mut lateral = 0.0_f64;
    let r = run_traced(&s, |row| {
        for w in row.power.wheel.0 {
            lateral = lateral.max(w.out_y.abs());
        }
    })
    .unwrap();
    assert_eq!(lateral, 0.0);
    assert!(r.ledger.e_loss_total() >= 0.0);
}

#[test]
fn lateral_slip_lowers_maneuver_power_below_traction() {
    let mut s = Scenario::new("change", highway(20.0));
    s.lane_change_interval = 400.0;
    let (mut steering_rows, mut violations) = (0, 0);
    let r = run_traced(&s, |row| {
        let p = &row.power;
        if p.lateral().abs() > 1.0 {
            steering_rows += 1;
            if p.maneuver >= p.traction_resultant() {
                violations += 1;
            }
        }
    })
    .unwrap();
    assert!(steering_rows > 100, "{steering_rows}");
    assert_eq!(violations, 0);
    assert!(r.ledger.e_loss_total() >= 0.0);
}
