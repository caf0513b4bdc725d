mod export;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use formation_core::scenario::{load_scenario, LoadedScenario, Overrides, ScenarioError};
use formation_core::sim::{collision_certificate, integrate, realized_collision_slack, CollisionReport, SimTrace};
use formation_core::ErrorCategory;
use serde::Serialize;

use export::CsvKind;

#[derive(Parser)]
#[command(name = "formation-lab", version, about = "Validate, certify and simulate formation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Output path (a directory when several scenarios are given).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Reject a position-only gain below the certified minimum.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    record_stride: Option<usize>,
    /// Scenarios processed concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            strict: self.strict,
            dt: self.dt,
            horizon: self.horizon,
            record_stride: self.record_stride,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the validation report.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write the weight matrices and Laplacian blocks as JSON.
    Weights {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Gain and collision certificates as JSON.
    Certify {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the closed loop. `.json` outputs hold the full trace, anything
    /// else gets position CSV.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Convert a JSON trace to CSV.
    Export {
        trace: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CsvKind::Positions)]
        kind: CsvKind,
    },
}

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Schema => 2,
        ErrorCategory::Structural => 3,
        ErrorCategory::Assumption => 4,
        ErrorCategory::NotLocalizable => 5,
        ErrorCategory::Certificate => 6,
        ErrorCategory::Contract => 7,
        ErrorCategory::Divergence => 8,
        ErrorCategory::Io => 9,
    }
}

const USAGE_EXIT: u8 = 64;

fn io_error(path: &Path, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError {
        issues: vec![formation_core::scenario::Issue {
            category: ErrorCategory::Io,
            field: path.display().to_string(),
            message: e.to_string(),
        }],
    }
}

fn run_error(field: &str, e: formation_core::FormationError) -> ScenarioError {
    ScenarioError {
        issues: vec![formation_core::scenario::Issue {
            category: e.category(),
            field: field.into(),
            message: e.to_string(),
        }],
    }
}

/// Destination of one scenario's output; `None` means stdout.
fn destination(flags: &RunFlags, scenario: &Path, count: usize, ext: &str) -> Result<Option<PathBuf>, ScenarioError> {
    match (&flags.output, count) {
        (None, _) => Ok(None),
        (Some(p), 1) => Ok(Some(p.clone())),
        (Some(dir), _) => {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            let stem = scenario.file_stem().unwrap_or_default().to_string_lossy();
            Ok(Some(dir.join(format!("{stem}.{ext}"))))
        }
    }
}

fn write_output(dest: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), ScenarioError> {
    match dest {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| io_error(Path::new("<stdout>"), e))
        }
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
        }
    }
}

fn write_json<T: Serialize>(dest: Option<&Path>, value: &T) -> Result<(), ScenarioError> {
    write_output(dest, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn print_report(loaded: &LoadedScenario) -> String {
    let r = &loaded.report;
    let c = &r.certificate;
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(format!("scenario: {} ({}-D, {:?})", r.name, r.dimension, r.follower_mode));
    line(format!("localizable: {} (cond {:.3e})", r.localizable, r.cond));
    line(format!(
        "two-reachable: all ({})",
        r.two_reachable.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
    ));
    line(format!("follower subgraph undirected: {}", r.follower_subgraph_undirected));
    line(format!("xi: {}", c.xi));
    line(format!("delta: {}", c.delta));
    line(format!(
        "alpha2: {} (alpha2_min {}, {})",
        c.alpha2,
        c.alpha2_min,
        if c.passed { "certified" } else { "below certificate" }
    ));
    for w in &r.warnings {
        line(format!("warning: {w}"));
    }
    s
}

#[derive(Serialize)]
struct CertifyOut<'a> {
    name: &'a str,
    xi: f64,
    delta: f64,
    alpha2: f64,
    alpha2_min: f64,
    gain_certified: bool,
    collision: &'a CollisionReport,
    /// Smallest realized distance minus the certified bound, over the run.
    realized_slack: f64,
    min_distance: f64,
}

fn simulate(loaded: &LoadedScenario) -> Result<SimTrace, ScenarioError> {
    log::info!("simulating {}", loaded.scenario.name);
    integrate(&loaded.scenario).map_err(|e| run_error("simulation", e))
}

fn process(command: &Command, path: &Path, count: usize) -> Result<(), ScenarioError> {
    let flags = match command {
        Command::Validate { flags, .. }
        | Command::Weights { flags, .. }
        | Command::Certify { flags, .. }
        | Command::Simulate { flags, .. } => flags,
        Command::Export { .. } => unreachable!("export has its own path"),
    };
    let loaded = load_scenario(path, &flags.overrides())?;
    match command {
        Command::Validate { .. } => {
            let dest = destination(flags, path, count, "json")?;
            match dest {
                None => write_output(None, |w| w.write_all(print_report(&loaded).as_bytes())),
                Some(p) => write_json(Some(&p), &loaded.report),
            }
        }
        Command::Weights { .. } => {
            let dest = destination(flags, path, count, "json")?;
            write_json(dest.as_deref(), &export::all_blocks(&loaded.scenario.maneuver))
        }
        Command::Certify { .. } => {
            let trace = simulate(&loaded)?;
            let collision = collision_certificate(&loaded.scenario, &trace).map_err(|e| run_error("certificate", e))?;
            let c = &loaded.report.certificate;
            let out = CertifyOut {
                name: &loaded.report.name,
                xi: c.xi,
                delta: c.delta,
                alpha2: c.alpha2,
                alpha2_min: c.alpha2_min,
                gain_certified: c.passed,
                realized_slack: realized_collision_slack(&trace, &collision),
                min_distance: trace.samples.iter().map(|s| s.min_dist).fold(f64::INFINITY, f64::min),
                collision: &collision,
            };
            let dest = destination(flags, path, count, "json")?;
            write_json(dest.as_deref(), &out)
        }
        Command::Simulate { .. } => {
            let trace = simulate(&loaded)?;
            let dest = destination(flags, path, count, "csv")?;
            let json = dest
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e.eq_ignore_ascii_case("json"));
            if json {
                write_json(dest.as_deref(), &trace)
            } else {
                write_output(dest.as_deref(), |w| {
                    export::write_csv(&trace, CsvKind::Positions, w).map_err(io::Error::other)
                })
            }
        }
        Command::Export { .. } => unreachable!(),
    }
}

fn export_trace(trace: &Path, output: Option<&Path>, kind: CsvKind) -> Result<(), ScenarioError> {
    let text = std::fs::read_to_string(trace).map_err(|e| io_error(trace, e))?;
    let trace: SimTrace = serde_json::from_str(&text).map_err(|e| ScenarioError {
        issues: vec![formation_core::scenario::Issue {
            category: ErrorCategory::Schema,
            field: trace.display().to_string(),
            message: e.to_string(),
        }],
    })?;
    write_output(output, |w| export::write_csv(&trace, kind, w).map_err(io::Error::other))
}

fn report_failure(path: &Path, err: &ScenarioError) {
    eprintln!("error[{}]: {}", err.category(), path.display());
    for issue in &err.issues {
        eprintln!("  {issue}");
    }
}

/// Runs every scenario, `jobs` at a time; results keep input order.
fn run_batch(command: &Command, scenarios: &[PathBuf], jobs: usize) -> Vec<Result<(), ScenarioError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(), ScenarioError>>>> = Mutex::new(vec![None; scenarios.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, scenarios.len().max(1)) {
            s.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = scenarios.get(idx) else { break };
                let r = process(command, path, scenarios.len());
                results.lock().expect("no panics while holding the lock")[idx] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every scenario ran"))
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORMATION_LAB_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Export { trace, output, kind } => match export_trace(trace, output.as_deref(), *kind) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                report_failure(trace, &e);
                ExitCode::from(exit_code(e.category()))
            }
        },
        Command::Validate { scenarios, flags }
        | Command::Weights { scenarios, flags }
        | Command::Certify { scenarios, flags }
        | Command::Simulate { scenarios, flags } => {
            let results = run_batch(&cli.command, scenarios, flags.jobs);
            let mut worst: Option<ErrorCategory> = None;
            for (path, r) in scenarios.iter().zip(&results) {
                if let Err(e) = r {
                    report_failure(path, e);
                    let c = e.category();
                    if worst.is_none_or(|w| (c as u8) < (w as u8)) {
                        worst = Some(c);
                    }
                }
            }
            worst.map_or(ExitCode::SUCCESS, |c| ExitCode::from(exit_code(c)))
        }
    }
}
