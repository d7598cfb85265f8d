use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpgmg::dpg::DpgError;
use dpgmg::driver::{run_omega_sweep, run_study, selftest, DriverError, StudyConfig, StudyKind, StudyOutcome};
use dpgmg::io::{parse_config, write_csv, write_vtk, ConfigError};

const OK: u8 = 0;
const SOLVER_FAILURE: u8 = 1;
const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "dpgmg", version, about = "DPG Helmholtz studies with a multigrid-preconditioned trace solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform h refinement.
    HStudy(RunArgs),
    /// Uniform h until two elements per wavelength, then uniform p.
    PStudy(RunArgs),
    /// Dörfler marking with wavelength-based h/p selection.
    HpAdaptive(RunArgs),
    /// The configured study at every frequency in `omegas`.
    OmegaSweep(RunArgs),
    /// Quick invariant checks on tiny meshes.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Write one VTK file per grid.
    #[arg(long)]
    vtk: bool,
    /// Cells per element edge in VTK output.
    #[arg(long, default_value_t = 4)]
    vtk_subdivisions: usize,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        match e {
            DriverError::InvalidConfig(_) | DriverError::Dpg(DpgError::InvalidConfig(_)) => Self::Config(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("DPGMG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Config(format!("DPGMG_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn load(args: &RunArgs, expected: Option<StudyKind>) -> Result<StudyConfig, Failure> {
    let path = args.config.as_ref().ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let cfg = parse_config(path)?;
    if let Some(kind) = expected {
        if cfg.kind != kind {
            return Err(Failure::Config(format!(
                "config declares study = {} but the subcommand runs {}",
                cfg.kind.name(),
                kind.name()
            )));
        }
    }
    cfg.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn print_records(out: &StudyOutcome) {
    println!("{:>4} {:>9} {:>6} {:>12} {:>12} {:>9}", "grid", "ndof", "iters", "residual", "eta", "solve_s");
    for r in &out.records {
        println!(
            "{:>4} {:>9} {:>6} {:>12.3e} {:>12.4e} {:>9.3}",
            r.grid, r.ndof, r.iterations, r.final_residual, r.dpg_eta, r.solve_s
        );
    }
}

fn check_converged(out: &StudyOutcome) -> Result<(), Failure> {
    match out.records.iter().find(|r| !r.converged) {
        Some(r) => Err(Failure::Solver(format!("solver did not converge on grid {}", r.grid))),
        None => Ok(()),
    }
}

fn run_single(args: &RunArgs, kind: StudyKind, stem: &str) -> Result<(), Failure> {
    let cfg = load(args, Some(kind))?;
    let out = run_study(&cfg, args.vtk)?;
    print_records(&out);
    write(&args.out.join(format!("{stem}.csv")), &write_csv(&out.records))?;
    for (g, s) in out.snapshots.iter().enumerate() {
        let text = write_vtk(&s.mesh, &s.fields, &s.eta_sq, args.vtk_subdivisions);
        write(&args.out.join(format!("{stem}_grid{g}.vtk")), &text)?;
    }
    check_converged(&out)
}

fn run_sweep(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load(args, None)?;
    let sweep = run_omega_sweep(&cfg)?;
    let mut table = String::from("omega,max_iterations\n");
    for (i, row) in sweep.rows.iter().enumerate() {
        println!("omega = {:.6}: max iterations {}", row.omega, row.max_iterations);
        table.push_str(&format!("{:e},{}\n", row.omega, row.max_iterations));
        write(&args.out.join(format!("sweep_omega{i}.csv")), &write_csv(&row.outcome.records))?;
    }
    write(&args.out.join("sweep.csv"), &table)?;
    match sweep.slope {
        Some(s) => println!("log-log slope of iterations against omega: {s:.3}"),
        None => println!("log-log slope undefined for a single frequency"),
    }
    for row in &sweep.rows {
        check_converged(&row.outcome)?;
    }
    Ok(())
}

fn run_selftest() -> Result<(), Failure> {
    let results = selftest();
    for r in &results {
        println!("{} {} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Solver("selftest failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::HStudy(a) => run_single(a, StudyKind::UniformH, "h_study"),
        Command::PStudy(a) => run_single(a, StudyKind::UniformP, "p_study"),
        Command::HpAdaptive(a) => run_single(a, StudyKind::HpAdaptive, "hp_adaptive"),
        Command::OmegaSweep(a) => run_sweep(a),
        Command::Selftest => run_selftest(),
    });
    match result {
        Ok(()) => ExitCode::from(OK),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(SOLVER_FAILURE)
        }
    }
}
