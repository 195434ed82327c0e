use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracflow::bench::{run_benchmark, step_csv, BenchOptions};
use fracflow::case::{load_and_build, parse_solver_kind};
use fracflow::netgen::{generate_fracture_network, network_file_string, GeneratorConfig, OrientationModel};
use fracflow::output::vtk::write_vtk_snapshot;
use fracflow::sim::{run_simulation, SimulationError, SolverConfig};
use fracflow::units::DARCY;
use fracflow::FracflowError;

const EXIT_CONFIG: u8 = 2;
const EXIT_SIMULATION: u8 = 3;

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Two-phase flow simulator for fractured porous media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single case with the selected transport solver.
    Run {
        /// Case file (TOML).
        case: PathBuf,
        /// Transport solver: newton | enne.
        #[arg(long, default_value = "newton")]
        solver: String,
        /// Override the activation threshold gamma.
        #[arg(long)]
        gamma: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run both solver arms and emit comparison reports.
    Bench {
        case: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report wall-clock columns as zero for byte-reproducible CSVs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Generate a synthetic fracture network file.
    GenFrac {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        /// Domain size as `WIDTHxHEIGHT` in meters.
        #[arg(long, default_value = "600x175")]
        domain: String,
        #[arg(long, default_value_t = 20.0)]
        length_min: f64,
        #[arg(long, default_value_t = 80.0)]
        length_max: f64,
        #[arg(long, default_value_t = 0.04)]
        aperture: f64,
        #[arg(long, default_value_t = 1000.0)]
        perm_darcy: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum AppError {
    Config(FracflowError),
    Simulation(String),
}

impl From<FracflowError> for AppError {
    fn from(e: FracflowError) -> Self {
        AppError::Config(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(AppError::Simulation(e)) => {
            eprintln!("simulation failed: {e}");
            ExitCode::from(EXIT_SIMULATION)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run { case, solver, gamma, out } => cmd_run(&case, &solver, gamma, &out),
        Command::Bench { case, out, no_timing } => cmd_bench(&case, &out, no_timing),
        Command::GenFrac { seed, count, domain, length_min, length_max, aperture, perm_darcy, out } => {
            let config = GeneratorConfig {
                seed,
                count,
                length_min,
                length_max,
                orientation: OrientationModel::Uniform,
                aperture,
                permeability: perm_darcy * DARCY,
                porosity: 0.5,
            };
            cmd_gen_frac(&config, &domain, out.as_deref())
        }
    }
}

fn cmd_run(case_path: &Path, solver: &str, gamma: Option<f64>, out_dir: &Path) -> Result<(), AppError> {
    let built = load_and_build(case_path)?;
    let mut config = SolverConfig { solver_kind: parse_solver_kind(solver)?, ..built.solver.clone() };
    if let Some(g) = gamma {
        config.activation.gamma = g;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| FracflowError::io(out_dir, e))?;

    let snapshot = |state, name: &str| {
        write_vtk_snapshot(&built.model.grid, &built.model.topology, state, &out_dir.join(name))
    };
    snapshot(&built.initial, "initial.vtk")?;

    let output = run_simulation(&built.model, &built.schedule, &config, built.initial.clone())
        .map_err(|e: SimulationError| AppError::Simulation(e.to_string()))?;

    let csv_path = out_dir.join("steps.csv");
    std::fs::write(&csv_path, step_csv(&output.reports, false))
        .map_err(|e| FracflowError::io(&csv_path, e))?;
    for snap in &output.snapshots {
        snapshot(&snap.state, &format!("snapshot_t{:.2}.vtk", snap.fraction_of_total))?;
    }
    snapshot(&output.final_state, "final.vtk")?;

    let total: usize = output.reports.iter().map(|r| r.transport_iterations + r.wasted_iterations).sum();
    let wasted: usize = output.reports.iter().map(|r| r.wasted_iterations).sum();
    let activations: usize = output.reports.iter().filter(|r| r.activated).count();
    let wall: f64 = output.reports.iter().map(|r| r.wall_seconds).sum();
    println!("case: {}", built.name);
    println!("steps: {}", output.reports.len());
    println!("transport iterations (wasted): {total} ({wasted})");
    println!("activations: {activations}");
    println!("wall time: {wall:.2} s");
    println!("reports in {}", out_dir.display());
    Ok(())
}

fn cmd_bench(case_path: &Path, out_dir: &Path, no_timing: bool) -> Result<(), AppError> {
    let built = load_and_build(case_path)?;
    let options = BenchOptions { zero_walltime: no_timing };
    let result = run_benchmark(&built, out_dir, &options)?;

    println!("case: {}", built.name);
    println!("arm     steps  iterations (wasted)  cuts  activations  wall_s");
    for arm in [&result.newton, &result.enne] {
        let t = arm.totals();
        println!(
            "{:<7} {:>5}  {:>10} ({:>6})  {:>4}  {:>11}  {:>7.2}",
            arm.label,
            arm.reports.len(),
            t.total_iterations,
            t.wasted_iterations,
            t.cuts,
            t.activations,
            t.wall_seconds
        );
    }
    println!("reports in {}", out_dir.display());

    let failures: Vec<&str> = [&result.newton, &result.enne]
        .iter()
        .filter_map(|a| a.error.as_deref())
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(AppError::Simulation(failures.join("; ")))
    }
}

fn cmd_gen_frac(config: &GeneratorConfig, domain: &str, out: Option<&Path>) -> Result<(), AppError> {
    let (w, h) = domain
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
        .ok_or_else(|| FracflowError::config("--domain", "expected WIDTHxHEIGHT, e.g. 600x175"))?;
    let network = generate_fracture_network(config, [w, h]);
    let text = network_file_string(&network);
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| FracflowError::io(path, e))?;
            println!("wrote {} fractures to {}", network.fractures.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
