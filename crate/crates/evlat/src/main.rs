use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use evlat::batch::{run_batch, Outcome};
use evlat::config::{parse_config, RunConfig, UnknownKeys};
use evlat::core::scenario::{range_extrapolate, Scenario};
use evlat::report::{render_balance, render_console, write_summary_csv, SummaryRow};

const EXIT_CONFIG: u8 = 1;
const EXIT_SIMULATION: u8 = 2;
const EXIT_IDENTITY: u8 = 3;

#[derive(Parser)]
#[command(name = "evlat", version, about = "Dual-track EV dynamics and energy-flow simulator")]
struct Cli {
    /// Warn about unknown config keys instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file, writing traces and a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the regen × lane-change grid for every cycle and print the tables.
    Table {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the config's scenarios and verify the energy-balance identities.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Extrapolate driving range from one cycle's energy and distance.
    Range {
        #[arg(long)]
        capacity_kwh: f64,
        #[arg(long)]
        energy_kwh: f64,
        #[arg(long)]
        distance_km: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let unknown = if cli.lenient { UnknownKeys::Warn } else { UnknownKeys::Reject };
    match cli.command {
        Command::Simulate { config, out, workers } => simulate(&config, out, workers, unknown),
        Command::Table { config, workers } => table(&config, workers, unknown),
        Command::Check { config, workers } => check(&config, workers, unknown),
        Command::Range { capacity_kwh, energy_kwh, distance_km } => {
            match range_extrapolate(capacity_kwh, energy_kwh, distance_km) {
                Ok(r) => {
                    println!("{r:.2} km");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}

fn load(path: &Path, unknown: UnknownKeys) -> Result<RunConfig, ExitCode> {
    parse_config(path, unknown).map_err(|e| {
        eprintln!("config error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn worker_count(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
}

/// Splits outcomes into summary rows, reporting every failed run.
fn collect(outcomes: &[Outcome], tol: f64) -> Result<Vec<SummaryRow>, Vec<SummaryRow>> {
    let mut rows = Vec::new();
    let mut failed = false;
    for o in outcomes {
        match &o.result {
            Ok(r) => rows.push(SummaryRow::new(&o.scenario, r, tol)),
            Err(e) => {
                eprintln!("simulation fault in {}: {e}", o.scenario.name);
                failed = true;
            }
        }
    }
    if failed {
        Err(rows)
    } else {
        Ok(rows)
    }
}

fn write_outputs(dir: &Path, name: &str, cfg: &RunConfig, rows: &[SummaryRow], outcomes: &[Outcome], workers: usize) -> std::io::Result<()> {
    fs::write(dir.join("config.echo.toml"), cfg.echo())?;
    write_summary_csv(rows, BufWriter::new(File::create(dir.join(format!("{name}.csv")))?))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut meta = format!("version = \"{}\"\nfinished_unix_s = {started}\nworkers = {workers}\n", env!("CARGO_PKG_VERSION"));
    for o in outcomes {
        meta.push_str(&format!(
            "\n[[run]]\nscenario = {:?}\nwall_s = {}\nok = {}\n",
            o.scenario.name,
            o.wall.as_secs_f64(),
            o.result.is_ok()
        ));
        if let Some(t) = &o.trace {
            meta.push_str(&format!("trace = {:?}\n", t.display().to_string()));
        }
    }
    fs::write(dir.join("run_meta.toml"), meta)
}

fn run_and_report(cfg: &RunConfig, scenarios: &[Scenario], out: &Path, name: &str, workers: usize, traces: bool) -> ExitCode {
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("cannot create {}: {e}", out.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let outcomes = run_batch(scenarios, workers, traces.then_some(out));
    let (rows, ok) = match collect(&outcomes, cfg.identity_tol) {
        Ok(rows) => (rows, true),
        Err(rows) => (rows, false),
    };
    if let Err(e) = write_outputs(out, name, cfg, &rows, &outcomes, workers) {
        eprintln!("cannot write results to {}: {e}", out.display());
        return ExitCode::from(EXIT_SIMULATION);
    }
    print!("{}", render_console(&rows));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SIMULATION)
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, workers: Option<usize>, unknown: UnknownKeys) -> ExitCode {
    let cfg = match load(config, unknown) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out = out.unwrap_or_else(|| cfg.output_dir.clone());
    run_and_report(&cfg, &cfg.scenarios, &out, "summary", worker_count(workers), cfg.write_traces)
}

fn table(config: &Path, workers: Option<usize>, unknown: UnknownKeys) -> ExitCode {
    let cfg = match load(config, unknown) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let grid = cfg.grid();
    run_and_report(&cfg, &grid, &cfg.output_dir, "table", worker_count(workers), false)
}

fn check(config: &Path, workers: Option<usize>, unknown: UnknownKeys) -> ExitCode {
    let cfg = match load(config, unknown) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let outcomes = run_batch(&cfg.scenarios, worker_count(workers), None);
    let rows = match collect(&outcomes, cfg.identity_tol) {
        Ok(rows) => rows,
        Err(rows) => {
            print!("{}", render_balance(&rows));
            return ExitCode::from(EXIT_SIMULATION);
        }
    };
    print!("{}", render_balance(&rows));
    if rows.iter().all(|r| r.balance.passed()) {
        println!("all identities within {:e}", cfg.identity_tol);
        ExitCode::SUCCESS
    } else {
        eprintln!("energy-balance identity failure");
        ExitCode::from(EXIT_IDENTITY)
    }
}
