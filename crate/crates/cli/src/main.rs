use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lightray_core::group::enumerate_ball;
use lightray_core::io::{read_events, write_events, Scenario};
use lightray_core::lightpath::simulate_scan;
use lightray_core::reconstruct::{invariant_compare, reconstruct, Mode};
use lightray_core::{Error, Tolerances};

mod examples;
mod manifest;
mod report;

use manifest::{Manifest, Stopwatch};

/// Largest invariant deviation accepted by `roundtrip`.
const ROUNDTRIP_TOLERANCE: f64 = 1e-5;

#[derive(Parser)]
#[command(
    name = "lightray",
    version,
    about = "Returning-lightray measurements and holonomy reconstruction for flat (2+1)-dimensional spacetimes",
    after_help = "Exit codes: 0 success, 1 I/O, 2 usage, 3 parse, 4 validation, 5 insufficient data, 6 residual failure."
)]
struct Cli {
    /// Worker threads for the parallel stages (default: one per core).
    /// Outputs do not depend on this value.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Record per-stage wall-clock timings in manifest.json. Timings make
    /// the manifest differ between runs.
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct OutDir {
    /// Output directory (created if missing).
    #[arg(long, env = "LIGHTRAY_OUT_DIR", default_value = "lightray-out", value_name = "DIR")]
    out: PathBuf,
}

#[derive(clap::Args, Clone, Default)]
struct Overrides {
    /// Word-ball radius L; overrides the scenario value.
    #[arg(long, value_name = "L")]
    ball_radius: Option<usize>,

    /// Tolerance override, repeatable. Keys: eps, relator, dedup, graft, fit.
    #[arg(long = "tolerance", value_name = "KEY=VALUE", value_parser = parse_tolerance)]
    tolerance: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate all return events of a scenario; writes events.csv and manifest.json.
    Simulate {
        /// Scenario file (TOML).
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        out: OutDir,
    },
    /// Reconstruct the holonomies from an event table; writes report.json and manifest.json.
    Reconstruct {
        /// Event table (CSV) as written by `simulate`.
        #[arg(long, value_name = "FILE")]
        events: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Tolerance override, repeatable. Keys: eps, relator, dedup, graft, fit.
        #[arg(long = "tolerance", value_name = "KEY=VALUE", value_parser = parse_tolerance)]
        tolerance: Vec<(String, f64)>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Simulate, write and re-read the event table, reconstruct, and compare
    /// the invariants with the input holonomy. Passes iff the deviation is
    /// below 1e-5.
    Roundtrip {
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
        /// Reconstruction mode; default: evolving with two or more emission
        /// times, static otherwise.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write events.csv, report.json and manifest.json to DIR.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Write a ready-made scenario file.
    Example {
        #[arg(value_enum)]
        kind: examples::Kind,
        /// Seed for the `random` kind.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file (default: standard output).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Evolving,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Static => Mode::Static,
            ModeArg::Evolving => Mode::Evolving,
        }
    }
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    if !["eps", "relator", "dedup", "graft", "fit"].contains(&k) {
        return Err(format!("unknown tolerance `{k}`"));
    }
    let v: f64 = v.parse().map_err(|_| format!("invalid number `{v}`"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err("tolerances must be positive".into());
    }
    Ok((k.to_string(), v))
}

fn apply_tolerances(tol: &mut Tolerances, overrides: &[(String, f64)]) {
    for (k, v) in overrides {
        match k.as_str() {
            "eps" => tol.eps = *v,
            "relator" => tol.relator = *v,
            "dedup" => tol.dedup = *v,
            "graft" => tol.graft = *v,
            "fit" => tol.fit = *v,
            _ => unreachable!("rejected by the parser"),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Residual(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    fn kind(&self) -> (&'static str, u8) {
        match self {
            Failure::Residual(_) => ("residual", 6),
            Failure::Core(e) => match e {
                Error::Io(_) => ("io", 1),
                Error::Parse(_) => ("parse", 3),
                Error::InsufficientData(_) => ("insufficient-data", 5),
                Error::Reconstruction(_) | Error::FitFailure { .. } | Error::AmbiguousPairing { .. } => {
                    ("residual", 6)
                }
                Error::Internal(_) => ("internal", 1),
                _ => ("validation", 4),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Residual(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", json!({"status": "error", "kind": "usage", "exit_code": 2, "message": e.to_string()}));
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate {
            scenario,
            overrides,
            out,
        } => simulate(&scenario, &overrides, &out.out, cli.timings),
        Command::Reconstruct {
            events,
            mode,
            tolerance,
            out,
        } => reconstruct_cmd(&events, mode.into(), &tolerance, &out.out, cli.timings),
        Command::Roundtrip {
            scenario,
            mode,
            overrides,
            out,
        } => roundtrip(&scenario, mode.map(Mode::from), &overrides, out.as_deref(), cli.timings),
        Command::Example { kind, seed, out } => example(kind, seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, code) = f.kind();
            eprintln!(
                "{}",
                json!({"status": "error", "kind": kind, "exit_code": code, "message": f.message()})
            );
            ExitCode::from(code)
        }
    }
}

struct Loaded {
    scenario: Scenario,
    bytes: Vec<u8>,
    holonomy: lightray_core::holonomy::HolonomyMap,
    observer: lightray_core::lightpath::ObserverWorldline,
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Core(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Loaded, Failure> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Parse(format!("{}: not UTF-8: {e}", path.display())))?;
    let mut scenario = Scenario::from_toml_str(text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    apply_tolerances(&mut scenario.tolerance, &overrides.tolerance);
    if let Some(l) = overrides.ball_radius {
        scenario.ball_radius = l;
    }
    if scenario.ball_radius == 0 {
        return Err(Error::Validation("ball radius must be at least 1".into()).into());
    }
    scenario.validate_times()?;
    let holonomy = scenario.holonomy()?;
    let observer = scenario.observer()?;
    Ok(Loaded {
        scenario,
        bytes,
        holonomy,
        observer,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn simulate(path: &Path, overrides: &Overrides, out: &Path, timings: bool) -> Outcome {
    let mut clock = Stopwatch::new(timings);
    let loaded = load_scenario(path, overrides)?;
    clock.lap("load");
    let sc = &loaded.scenario;
    let events = simulate_scan(&loaded.observer, &loaded.holonomy, sc.ball_radius, &sc.emission_times)?;
    clock.lap("simulate");
    let mut csv = Vec::new();
    write_events(&mut csv, &events)?;

    let mut manifest = Manifest::new("simulate", &file_name(path), &loaded.bytes);
    manifest.parameter("ball_radius", json!(sc.ball_radius));
    manifest.parameter("emission_times", json!(sc.emission_times));
    manifest.parameter("events", json!(events.len()));
    fs::create_dir_all(out)?;
    manifest.write_output(out, "events.csv", &csv)?;
    clock.lap("write");
    manifest.finish(out, clock)?;
    println!(
        "{}",
        json!({"status": "ok", "events": events.len(), "out": out.display().to_string()})
    );
    Ok(())
}

fn reconstruct_cmd(path: &Path, mode: Mode, tolerance: &[(String, f64)], out: &Path, timings: bool) -> Outcome {
    let mut clock = Stopwatch::new(timings);
    let bytes = read_input(path)?;
    let data = read_events(bytes.as_slice()).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    clock.lap("load");
    let mut tol = Tolerances::default();
    apply_tolerances(&mut tol, tolerance);
    let rec = reconstruct(&data, mode, &tol)?;
    clock.lap("reconstruct");
    let (report, check) = report::reconstruction(&rec, data.len(), &tol);

    let mut manifest = Manifest::new("reconstruct", &file_name(path), &bytes);
    manifest.parameter("mode", json!(mode));
    manifest.parameter("tolerance", json!(tol));
    fs::create_dir_all(out)?;
    manifest.write_output(out, "report.json", &report::to_bytes(&report))?;
    manifest.finish(out, clock)?;
    println!("{}", json!({"status": if check.passed { "ok" } else { "failed" }, "residuals": check.summary()}));
    if check.passed {
        Ok(())
    } else {
        Err(Failure::Residual(check.failure_message()))
    }
}

fn roundtrip(
    path: &Path,
    mode: Option<Mode>,
    overrides: &Overrides,
    out: Option<&Path>,
    timings: bool,
) -> Outcome {
    let mut clock = Stopwatch::new(timings);
    let loaded = load_scenario(path, overrides)?;
    let sc = &loaded.scenario;
    clock.lap("load");
    let events = simulate_scan(&loaded.observer, &loaded.holonomy, sc.ball_radius, &sc.emission_times)?;
    let mut csv = Vec::new();
    write_events(&mut csv, &events)?;
    let data = read_events(csv.as_slice())?;
    clock.lap("simulate");
    let mode = mode.unwrap_or(if sc.emission_times.len() >= 2 {
        Mode::Evolving
    } else {
        Mode::Static
    });
    let rec = reconstruct(&data, mode, &sc.tolerance)?;
    clock.lap("reconstruct");
    let words: Vec<_> = enumerate_ball(&loaded.holonomy.lorentz_generators(), sc.ball_radius)
        .non_identity()
        .map(|e| e.word.clone())
        .collect();
    let hr = &rec.holonomy;
    let deviation = invariant_compare(&loaded.holonomy, &loaded.observer, &hr.map, &hr.observer, &words)?;
    let (mut report, check) = report::reconstruction(&rec, data.len(), &sc.tolerance);
    let passed = deviation < ROUNDTRIP_TOLERANCE && check.passed;
    let summary = json!({
        "status": if passed { "pass" } else { "fail" },
        "mode": mode,
        "deviation": deviation,
        "tolerance": ROUNDTRIP_TOLERANCE,
        "words_compared": words.len(),
        "residuals": check.summary(),
    });
    if let Some(out) = out {
        if let Value::Object(m) = &mut report {
            m.insert("roundtrip".into(), summary.clone());
        }
        let mut manifest = Manifest::new("roundtrip", &file_name(path), &loaded.bytes);
        manifest.parameter("ball_radius", json!(sc.ball_radius));
        manifest.parameter("mode", json!(mode));
        fs::create_dir_all(out)?;
        manifest.write_output(out, "events.csv", &csv)?;
        manifest.write_output(out, "report.json", &report::to_bytes(&report))?;
        manifest.finish(out, clock)?;
    }
    println!("{summary}");
    if passed {
        Ok(())
    } else if !check.passed {
        Err(Failure::Residual(check.failure_message()))
    } else {
        Err(Failure::Residual(format!(
            "invariant deviation {deviation:e} exceeds {ROUNDTRIP_TOLERANCE:e}"
        )))
    }
}

fn example(kind: examples::Kind, seed: u64, out: Option<&Path>) -> Outcome {
    let text = examples::build(kind, seed)?.to_toml_string();
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
