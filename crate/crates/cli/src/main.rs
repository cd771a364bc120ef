//! Command-line front end: geometry reports, beam-pattern sampling,
//! single-scenario solves, and Monte Carlo simulation runs.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when scenario
//! generation is infeasible, 4 when the solver fails on every trial;
//! anything else is 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use nestnull_core::beamforming::{
    beam_pattern, solve_weights, NullingSpec, SolveOptions as BeamOptions,
};
use nestnull_core::coarray::{difference_coarray, max_dof, ArrayGeometry};
use nestnull_core::harness::{simulate, ExperimentConfig, HarnessError, SweepValues};
use nestnull_core::hetnet::{Scenario, ScenarioDoc};
use nestnull_core::optimizer::{solve, Method, OptimizerError, SolveOptions};

#[derive(Parser)]
#[command(
    name = "nestnull",
    version,
    about = "Nested-array interference nulling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report a nested array's geometry and difference co-array
    Coarray(CoarrayArgs),
    /// Sample a nulling beam pattern over a direction grid into a CSV
    Pattern(PatternArgs),
    /// Solve one scenario file with one method into a JSON report
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment from a config file
    Simulate(SimulateArgs),
    /// Sweep one parameter over a list of values
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CoarrayArgs {
    /// Inner (dense) level size
    #[arg(long)]
    n1: usize,
    /// Outer (sparse) level size
    #[arg(long)]
    n2: usize,
    /// Emit JSON instead of a text report
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PatternArgs {
    /// Geometry JSON file ({"unit_spacing_halves_lambda":1,"positions":[...]})
    #[arg(long)]
    geometry: PathBuf,
    /// Desired directions in degrees (pattern gain 1), comma-separated
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    desired: Vec<f64>,
    /// Null directions in degrees (pattern gain 0), comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    nulls: Vec<f64>,
    /// Number of grid points across (−90°, 90°)
    #[arg(long, default_value_t = 361)]
    grid: usize,
    /// Output CSV path (theta_deg,re,im,abs)
    #[arg(long)]
    out: PathBuf,
    /// Skip the noise-nulling row
    #[arg(long)]
    no_noise_null: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// One of: no_nulling, heuristic, cutting_plane, lp_unimodular,
    /// brute_force, upper_bound_p4
    #[arg(long)]
    method: String,
    /// Expansion truncation order
    #[arg(long)]
    max_order: Option<usize>,
    /// Output JSON report path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for trials.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
    /// Override the configured trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config JSON file
    #[arg(long)]
    config: PathBuf,
    /// Parameter to sweep: n_sbs or n_users
    #[arg(long)]
    param: String,
    /// Sweep values, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Output directory for trials.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
}

/// Error category driving the process exit code.
enum Failure {
    Config(anyhow::Error),
    Infeasible(anyhow::Error),
    Solver(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Solver(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e)
            | Failure::Infeasible(e)
            | Failure::Solver(e)
            | Failure::Other(e) => e,
        }
    }
}

fn classify_harness(e: HarnessError) -> Failure {
    match &e {
        HarnessError::Config(_) => Failure::Config(e.into()),
        HarnessError::Placement { .. } | HarnessError::InfeasibleGeneration { .. } => {
            Failure::Infeasible(e.into())
        }
        HarnessError::AllTrialsFailed => Failure::Solver(e.into()),
        _ => Failure::Other(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Coarray(args) => run_coarray(args),
        Command::Pattern(args) => run_pattern(args),
        Command::Solve(args) => run_solve(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Sweep(args) => run_sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}

fn run_coarray(args: CoarrayArgs) -> Result<(), Failure> {
    let geometry = ArrayGeometry::nested(args.n1, args.n2)
        .map_err(|e| Failure::Config(anyhow::Error::new(e)))?;
    let coarray = difference_coarray(&geometry);
    if args.json {
        let value = serde_json::json!({
            "geometry": geometry,
            "sensors": geometry.sensor_count(),
            "lags": coarray.lags,
            "lag_count": coarray.lag_count(),
            "contiguous_aperture": coarray.contiguous_aperture,
            "hole_free": coarray.is_hole_free(),
            "max_dof": max_dof(geometry.sensor_count()),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("serializable")
        );
    } else {
        println!("nested array ({}, {})", args.n1, args.n2);
        println!("  positions (units of λ/2): {:?}", geometry.positions);
        println!("  sensors:                  {}", geometry.sensor_count());
        println!("  distinct lags:            {}", coarray.lag_count());
        println!(
            "  contiguous aperture:      ±{}",
            coarray.contiguous_aperture
        );
        println!("  hole-free:                {}", coarray.is_hole_free());
        println!(
            "  max co-array DoF N(N-1):  {}",
            max_dof(geometry.sensor_count())
        );
    }
    Ok(())
}

fn run_pattern(args: PatternArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.geometry)
        .with_context(|| format!("reading {}", args.geometry.display()))
        .map_err(Failure::Config)?;
    let geometry: ArrayGeometry = serde_json::from_str(&text)
        .context("parsing geometry JSON")
        .map_err(Failure::Config)?;
    if args.grid == 0 {
        return Err(Failure::Config(anyhow::anyhow!("grid must be positive")));
    }
    let to_rad = |d: &f64| d.to_radians();
    let mut spec = NullingSpec::new(
        args.desired.iter().map(to_rad).collect(),
        args.nulls.iter().map(to_rad).collect(),
    )
    .map_err(|e| Failure::Config(anyhow::Error::new(e)))?;
    if args.no_noise_null {
        spec = spec.without_noise_null();
    }
    let weights = solve_weights(&geometry, &spec, &BeamOptions::default())
        .map_err(|e| Failure::Solver(anyhow::Error::new(e)))?;
    let mut out = String::from("theta_deg,re,im,abs\n");
    for i in 0..args.grid {
        let theta_deg = -90.0 + 180.0 * (i as f64 + 0.5) / args.grid as f64;
        let b = beam_pattern(&geometry, &weights.w, theta_deg.to_radians());
        out.push_str(&format!(
            "{theta_deg:.6},{:.9e},{:.9e},{:.9e}\n",
            b.re,
            b.im,
            b.norm()
        ));
    }
    write_file(&args.out, &out).map_err(Failure::Other)?;
    eprintln!(
        "wrote {} ({} samples, solve residual {:.3e})",
        args.out.display(),
        args.grid,
        weights.residual
    );
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))
        .map_err(Failure::Config)?;
    let doc: ScenarioDoc = serde_json::from_str(&text)
        .context("parsing scenario JSON")
        .map_err(Failure::Config)?;
    let scenario = Scenario::from_doc(doc)
        .map_err(|e| Failure::Config(anyhow::Error::new(e).context("invalid scenario")))?;
    let method: Method = args
        .method
        .parse()
        .map_err(|e: String| Failure::Config(anyhow::anyhow!(e)))?;
    let mut opts = SolveOptions::default();
    if let Some(order) = args.max_order {
        opts.max_order = order;
    }
    let report = solve(&scenario, method, &opts).map_err(|e| match e {
        OptimizerError::Hetnet(_) => Failure::Config(anyhow::Error::new(e)),
        other => Failure::Solver(anyhow::Error::new(other)),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("serializable report");
    write_file(&args.out, &json).map_err(Failure::Other)?;
    eprintln!(
        "{}: sum rate {:.4} bits/s/Hz, {} nulls, {} cuts",
        method,
        report.objective_exact_rate,
        report.assignment.count_ones(),
        report.cuts_added
    );
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    ExperimentConfig::from_json(&text).map_err(classify_harness)
}

fn run_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(classify_harness)?;
    let reports = simulate(&config, &args.out).map_err(classify_harness)?;
    let failed = reports.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "wrote {} and {} ({} rows, {} failed)",
        args.out.join("trials.csv").display(),
        args.out.join("summary.csv").display(),
        reports.len(),
        failed
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    match args.param.as_str() {
        "n_sbs" => config.n_sbs = SweepValues::Many(args.values.clone()),
        "n_users" => config.n_users = SweepValues::Many(args.values.clone()),
        other => {
            return Err(Failure::Config(anyhow::anyhow!(
                "unknown sweep parameter `{other}` (expected n_sbs or n_users)"
            )))
        }
    }
    config.validate().map_err(classify_harness)?;
    let reports = simulate(&config, &args.out).map_err(classify_harness)?;
    eprintln!(
        "swept {} over {:?}: {} rows into {}",
        args.param,
        args.values,
        reports.len(),
        args.out.display()
    );
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
