//! Two-column drive-cycle CSV (`time_s,speed_mps`) and the bundled cycles.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use evlat_core::powertrain::LossMap;
use evlat_core::scenario::DriveCycle;
use thiserror::Error;

pub const HEADER: [&str; 2] = ["time_s", "speed_mps"];

/// Cycles shipped with the crate, by config name.
pub const BUILTIN: [(&str, &str); 3] = [
    ("ftp75", include_str!("../data/ftp75.csv")),
    ("hwfet", include_str!("../data/hwfet.csv")),
    ("nedc", include_str!("../data/nedc.csv")),
];

/// Errors carry 1-based line numbers of the file, header included.
#[derive(Debug, Error)]
pub enum CycleFileError {
    #[error("{source_name}: {error}")]
    Io { source_name: String, error: std::io::Error },
    #[error("{source_name}, line {line}: {reason}")]
    Parse { source_name: String, line: u64, reason: String },
    #[error("{source_name}, line {line}: {reason}")]
    Validation { source_name: String, line: u64, reason: &'static str },
}

impl CycleFileError {
    pub fn line(&self) -> Option<u64> {
        match self {
            CycleFileError::Io { .. } => None,
            CycleFileError::Parse { line, .. } | CycleFileError::Validation { line, .. } => Some(*line),
        }
    }
}

pub fn builtin_cycle(name: &str) -> Option<DriveCycle> {
    let key = name.to_ascii_lowercase().replace('-', "");
    let (name, text) = BUILTIN.iter().find(|(n, _)| *n == key)?;
    Some(parse_cycle(text.as_bytes(), name).expect("bundled cycle is valid"))
}

pub fn load_cycle(path: &Path) -> Result<DriveCycle, CycleFileError> {
    let source_name = path.display().to_string();
    let file = File::open(path).map_err(|error| CycleFileError::Io { source_name: source_name.clone(), error })?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| source_name.clone());
    parse_cycle(file, &name).map_err(|e| rename(e, &source_name))
}

fn rename(e: CycleFileError, source_name: &str) -> CycleFileError {
    let source_name = source_name.to_string();
    match e {
        CycleFileError::Io { error, .. } => CycleFileError::Io { source_name, error },
        CycleFileError::Parse { line, reason, .. } => CycleFileError::Parse { source_name, line, reason },
        CycleFileError::Validation { line, reason, .. } => CycleFileError::Validation { source_name, line, reason },
    }
}

/// Parses cycle CSV text; `name` names the cycle and the source in errors.
pub fn parse_cycle(input: impl Read, name: &str) -> Result<DriveCycle, CycleFileError> {
    let parse = |line: u64, reason: String| CycleFileError::Parse { source_name: name.to_string(), line, reason };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| parse(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse(1, format!("header must be `{}`", HEADER.join(","))));
    }
    let mut samples = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, CycleFileError> {
            let raw = record.get(i).ok_or_else(|| parse(line, "expected two columns".into()))?;
            raw.parse::<f64>().map_err(|_| parse(line, format!("`{raw}` is not a number")))
        };
        samples.push((field(0)?, field(1)?));
        lines.push(line);
    }
    DriveCycle::new(name, samples).map_err(|e| CycleFileError::Validation {
        source_name: name.to_string(),
        line: lines.get(e.index).copied().unwrap_or(lines.last().map_or(2, |l| l + 1)),
        reason: e.reason,
    })
}

/// Motor loss map in long form: header `speed_rad_s,torque_nm,loss_w`, one
/// row per grid point, covering a full rectangular grid.
pub fn load_loss_map(path: &Path) -> Result<LossMap, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| e.to_string())?;
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != ["speed_rad_s", "torque_nm", "loss_w"] {
        return Err("header must be `speed_rad_s,torque_nm,loss_w`".into());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        let mut v = [0.0; 3];
        for (i, slot) in v.iter_mut().enumerate() {
            let raw = record.get(i).ok_or_else(|| format!("line {line}: expected three columns"))?;
            *slot = raw.parse().map_err(|_| format!("line {line}: `{raw}` is not a number"))?;
        }
        rows.push(v);
    }
    let axis = |k: usize| {
        let mut a: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    };
    let (speeds, torques) = (axis(0), axis(1));
    let mut losses = vec![f64::NAN; speeds.len() * torques.len()];
    for r in &rows {
        let i = speeds.partition_point(|&s| s < r[0]);
        let j = torques.partition_point(|&t| t < r[1]);
        losses[i * torques.len() + j] = r[2];
    }
    if losses.iter().any(|l| l.is_nan()) {
        return Err("loss map does not cover a full speed × torque grid".into());
    }
    LossMap::new(speeds, torques, losses).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_cycles_parse() {
        for (name, _) in BUILTIN {
            assert!(builtin_cycle(name).is_some());
        }
        assert!(builtin_cycle("FTP-75").is_some());
        assert!(builtin_cycle("wltp").is_none());
    }

    #[test]
    fn bad_number_reports_its_line() {
        let e = parse_cycle("time_s,speed_mps\n0,0\n1,x\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(e, CycleFileError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn decreasing_time_reports_its_line() {
        let e = parse_cycle("time_s,speed_mps\n0,0\n2,1\n1,1\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(e, CycleFileError::Validation { line: 4, .. }), "{e}");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let e = parse_cycle("t,v\n0,0\n1,1\n".as_bytes(), "t").unwrap_err();
        assert_eq!(e.line(), Some(1));
    }
}
