//! Trace and summary CSV files and the console tables.
//!
//! Numbers in CSV files are written with the shortest representation that
//! parses back to the same `f64`, so files are byte-identical across runs and
//! every derived column can be recomputed bit for bit.

use std::fmt::Write as _;
use std::io::{self, Write};

use evlat_core::energy::{balance_report, classify_signs, BalanceReport};
use evlat_core::scenario::{range_extrapolate, trace_columns, RunResult, Scenario, TraceRow};
use evlat_core::{Wheel, J_PER_KWH};

/// Streams [`TraceRow`]s as CSV under the [`trace_columns`] header.
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
    values: Vec<f64>,
    fields: Vec<String>,
}

fn csv_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

impl<W: Write> TraceWriter<W> {
    pub fn new(inner: W) -> io::Result<Self> {
        let mut out = csv::Writer::from_writer(inner);
        out.write_record(trace_columns()).map_err(csv_io)?;
        Ok(TraceWriter { out, values: Vec::new(), fields: Vec::new() })
    }

    pub fn write(&mut self, row: &TraceRow) -> io::Result<()> {
        self.values.clear();
        row.values(&mut self.values);
        self.fields.clear();
        self.fields.extend(self.values.iter().map(|v| v.to_string()));
        self.out.write_record(&self.fields).map_err(csv_io)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// One summary line: distance, energy and range plus the ledger terms behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub cycle: String,
    pub regen: bool,
    pub lane_change_interval_m: f64,
    pub lane_changes: usize,
    pub distance_km: f64,
    pub battery_energy_kwh: f64,
    pub capacity_kwh: f64,
    /// `None` when the run used no net battery energy.
    pub range_km: Option<f64>,
    pub result: RunResult,
    pub balance: BalanceReport,
}

impl SummaryRow {
    pub fn new(s: &Scenario, r: &RunResult, tol: f64) -> Self {
        let capacity_kwh = s.battery.capacity_kwh;
        SummaryRow {
            scenario: s.name.clone(),
            cycle: s.cycle.name().to_string(),
            regen: s.regen_enabled,
            lane_change_interval_m: s.lane_change_interval,
            lane_changes: r.lane_changes,
            distance_km: r.distance_km(),
            battery_energy_kwh: r.battery_energy_kwh(),
            capacity_kwh,
            range_km: range_extrapolate(capacity_kwh, r.battery_energy_kwh(), r.distance_km()).ok(),
            result: r.clone(),
            balance: balance_report(&r.ledger, tol),
        }
    }

    fn lanes(&self) -> bool {
        self.lane_change_interval_m > 0.0
    }
}

pub const SUMMARY_COLUMNS: [&str; 30] = [
    "scenario",
    "cycle",
    "regen",
    "lane_change_interval_m",
    "lane_changes",
    "distance_km",
    "battery_energy_kwh",
    "capacity_kwh",
    "range_km",
    "e_b_out_j",
    "e_b_regen_j",
    "e_m_in_j",
    "e_m_out_j",
    "e_m_loss_j",
    "e_d_out_j",
    "e_w_m_j",
    "e_aero_j",
    "e_hold_j",
    "e_traction_resultant_j",
    "e_lateral_j",
    "e_out_x_front_j",
    "e_out_x_rear_j",
    "e_loss_j",
    "e_rot_j",
    "rms_speed_error_mps",
    "peak_lateral_error_m",
    "loss_share_p95",
    "final_soc",
    "worst_identity",
    "worst_residual",
];

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS).map_err(csv_io)?;
    for row in rows {
        let l = &row.result.ledger;
        let e_out_x = |front: bool| -> f64 {
            Wheel::ALL.iter().filter(|w| w.is_front() == front).map(|&w| l.wheel[w].e_out_x).sum()
        };
        let worst = row.balance.worst();
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let record: Vec<String> = vec![
            row.scenario.clone(),
            row.cycle.clone(),
            row.regen.to_string(),
            row.lane_change_interval_m.to_string(),
            row.lane_changes.to_string(),
            row.distance_km.to_string(),
            row.battery_energy_kwh.to_string(),
            row.capacity_kwh.to_string(),
            opt(row.range_km),
            l.e_b_out.to_string(),
            l.regen.e_b_out.to_string(),
            l.e_m_in.to_string(),
            l.e_m_out.to_string(),
            l.e_m_loss.to_string(),
            l.e_d_out.to_string(),
            l.e_w_m.to_string(),
            l.e_aero.to_string(),
            l.e_hold.to_string(),
            l.e_traction_resultant().to_string(),
            (l.e_out_total() - l.e_traction_resultant()).to_string(),
            e_out_x(true).to_string(),
            e_out_x(false).to_string(),
            l.e_loss_total().to_string(),
            l.e_rot_total().to_string(),
            row.result.rms_speed_error.to_string(),
            row.result.peak_lateral_error.to_string(),
            opt(row.result.loss_share.quantile(0.95)),
            row.result.final_soc.to_string(),
            worst.map_or(String::new(), |c| c.name.to_string()),
            opt(worst.map(|c| c.residual)),
        ];
        w.write_record(&record).map_err(csv_io)?;
    }
    w.flush()
}

fn kwh(j: f64) -> f64 {
    j / J_PER_KWH
}

/// Console rendering: a 2×2 regen × lane-change table for every cycle with all four
/// variants, a plain column per run otherwise, then the identity residuals
/// and the loss-share statistic.
pub fn render_console(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let mut cycles: Vec<&str> = Vec::new();
    for r in rows {
        if !cycles.contains(&r.cycle.as_str()) {
            cycles.push(&r.cycle);
        }
    }
    for cycle in cycles {
        let of_cycle: Vec<&SummaryRow> = rows.iter().filter(|r| r.cycle == cycle).collect();
        let find = |regen: bool, lanes: bool| of_cycle.iter().copied().find(|r| r.regen == regen && r.lanes() == lanes);
        let grid = [find(false, false), find(false, true), find(true, false), find(true, true)];
        if grid.iter().all(Option::is_some) {
            let g: Vec<&SummaryRow> = grid.iter().map(|r| r.unwrap()).collect();
            render_grid(&mut out, cycle, &g);
        } else {
            render_columns(&mut out, cycle, &of_cycle);
        }
        out.push('\n');
    }
    out.push_str("Balance identities and loss share\n");
    for r in rows {
        let worst = r.balance.worst();
        let flagged = r.balance.checks.iter().filter(|c| c.flagged).count();
        let p95 = r.result.loss_share.quantile(0.95).map_or("n/a".to_string(), |q| format!("{:.2} %", 100.0 * q));
        let _ = writeln!(
            out,
            "  {:<28} worst residual {:.2e} ({}), {} flagged; slip+spin share p95 {}",
            r.scenario,
            worst.map_or(0.0, |c| c.residual),
            worst.map_or("-", |c| c.name),
            flagged,
            p95
        );
    }
    out
}

fn fmt_range(r: Option<f64>) -> String {
    r.map_or("n/a".into(), |v| format!("{v:.2}"))
}

fn render_grid(out: &mut String, cycle: &str, g: &[&SummaryRow]) {
    let _ = writeln!(out, "{cycle}");
    let _ = writeln!(out, "{:<22}{:^28}{:^28}", "", "Without Regeneration", "With Regeneration");
    let _ = writeln!(out, "{:<22}{:>14}{:>14}{:>14}{:>14}", "", "no lanes", "lanes", "no lanes", "lanes");
    let line = |out: &mut String, label: &str, f: &dyn Fn(&SummaryRow) -> String| {
        let _ = write!(out, "{label:<22}");
        for r in g {
            let _ = write!(out, "{:>14}", f(r));
        }
        out.push('\n');
    };
    line(out, "Distance (km)", &|r| format!("{:.3}", r.distance_km));
    line(out, "Battery Energy (kWh)", &|r| format!("{:.3}", r.battery_energy_kwh));
    line(out, "Range (km)", &|r| fmt_range(r.range_km));
    let pct = |a: f64, b: f64| 100.0 * (b - a) / a;
    let _ = writeln!(
        out,
        "Lane-change energy uplift: {:+.3} % without regen, {:+.3} % with regen",
        pct(g[0].battery_energy_kwh, g[1].battery_energy_kwh),
        pct(g[2].battery_energy_kwh, g[3].battery_energy_kwh)
    );
    let _ = writeln!(
        out,
        "Regeneration saving: {:.2} % without lanes, {:.2} % with lanes",
        -pct(g[0].battery_energy_kwh, g[2].battery_energy_kwh),
        -pct(g[1].battery_energy_kwh, g[3].battery_energy_kwh)
    );
}

fn render_columns(out: &mut String, cycle: &str, rows: &[&SummaryRow]) {
    let _ = writeln!(out, "{cycle}");
    let _ = write!(out, "{:<22}", "");
    for r in rows {
        let label = format!("{}{}", if r.regen { "regen" } else { "no regen" }, if r.lanes() { ", lanes" } else { "" });
        let _ = write!(out, "{label:>20}");
    }
    out.push('\n');
    let line = |out: &mut String, label: &str, f: &dyn Fn(&SummaryRow) -> String| {
        let _ = write!(out, "{label:<22}");
        for r in rows {
            let _ = write!(out, "{:>20}", f(r));
        }
        out.push('\n');
    };
    line(out, "Distance (km)", &|r| format!("{:.3}", r.distance_km));
    line(out, "Battery Energy (kWh)", &|r| format!("{:.3}", r.battery_energy_kwh));
    line(out, "Range (km)", &|r| fmt_range(r.range_km));
}

/// Per-identity listing used by `check`.
pub fn render_balance(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let signs = classify_signs(&r.result.ledger);
        let _ = writeln!(out, "{} (tol {:e})", r.scenario, r.balance.tol);
        for c in &r.balance.checks {
            let _ = writeln!(
                out,
                "  {:<18} {:>16.6} kWh {:>16.6} kWh  residual {:.3e}{}",
                c.name,
                kwh(c.lhs),
                kwh(c.rhs),
                c.residual,
                if c.flagged { "  FLAGGED" } else { "" }
            );
        }
        let _ = writeln!(
            out,
            "  signs: front E_out_x dissipative {}, rear E_out_x tractive {}, regen charged {:?}, battery never charged {}",
            signs.front_dissipative, signs.rear_tractive, signs.regen_charged, signs.battery_never_charged
        );
    }
    out
}
