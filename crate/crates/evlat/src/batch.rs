//! Parallel execution of independent scenarios.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use evlat_core::scenario::{run, run_traced, RunResult, Scenario};
use evlat_core::SimError;
use rayon::prelude::*;
use thiserror::Error;

use crate::report::TraceWriter;

#[derive(Debug, Error)]
pub enum RunFailure {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing {path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
}

#[derive(Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    pub result: Result<RunResult, RunFailure>,
    pub wall: Duration,
    pub trace: Option<PathBuf>,
}

/// Trace file of a scenario inside `dir`.
pub fn trace_path(dir: &Path, scenario: &Scenario) -> PathBuf {
    let safe: String = scenario.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    dir.join(format!("{safe}.trace.csv"))
}

/// Runs every scenario on a pool of `workers` threads; results keep the input
/// order. With `trace_dir`, each run streams its trace to its own file.
pub fn run_batch(scenarios: &[Scenario], workers: usize, trace_dir: Option<&Path>) -> Vec<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| scenarios.par_iter().map(|s| run_one(s, trace_dir)).collect())
}

fn run_one(s: &Scenario, trace_dir: Option<&Path>) -> Outcome {
    let start = Instant::now();
    let trace = trace_dir.map(|d| trace_path(d, s));
    let result = match &trace {
        None => run(s).map_err(RunFailure::from),
        Some(path) => run_with_trace(s, path),
    };
    let wall = start.elapsed();
    match &result {
        Ok(r) => log::info!("{}: {:.3} km, {:.4} kWh in {:.1} s", s.name, r.distance_km(), r.battery_energy_kwh(), wall.as_secs_f64()),
        Err(e) => log::error!("{}: {e}", s.name),
    }
    Outcome { scenario: s.clone(), result, wall, trace }
}

fn run_with_trace(s: &Scenario, path: &Path) -> Result<RunResult, RunFailure> {
    let io = |error| RunFailure::Io { path: path.to_path_buf(), error };
    let file = File::create(path).map_err(io)?;
    let mut writer = TraceWriter::new(BufWriter::new(file)).map_err(io)?;
    let mut failed = None;
    let result = run_traced(s, |row| {
        if failed.is_none() {
            failed = writer.write(row).err();
        }
    });
    if let Some(error) = failed {
        return Err(io(error));
    }
    writer.finish().map_err(io)?;
    Ok(result?)
}
