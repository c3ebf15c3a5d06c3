//! Command-line driver: trajectory simulation (numeric and closed-form),
//! randomized verification suites, and coadjoint-orbit classification.
//!
//! Exit codes: 0 success; 1 verification failure; 2 configuration or parse
//! error; 3 solver error.

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use so5def::algebra::{classify_algebra, DeformationParams, LPlusPoint};
use so5def::dynamics::{self, ConservedSet};
use so5def::export::{
    lift_trajectory_csv, lp_trajectory_csv, trajectory_csv, ClosedFormSidecar,
};
use so5def::lift::{
    geodesic_flow, is_regular, lifted_rhs, momentum_i, momentum_j, orbit_report, reconstruct_qp,
    CotangentPoint,
};
use so5def::numeric::{ode_solve, ToleranceSpec};
use so5def::quadrature::{a_zero_data, ClosedFormSolution};
use so5def::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "so5",
    about = "Integrable Hamiltonian systems on the dual of deformed so(5)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate or evaluate a trajectory and write it as CSV.
    Simulate {
        /// JSON run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a randomized verification suite and print a JSON report.
    Verify {
        /// Suite name (jacobi, pencil, casimir, involution, dual-pair,
        /// plucker, equivariance, propagator, quadric-identity).
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
    /// Classify the coadjoint orbit through the momentum image of a point.
    Classify {
        /// JSON file with a cotangent point {"q": [5], "p": [5]}.
        #[arg(long)]
        point: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Mode {
    #[serde(rename = "lp-numeric")]
    LpNumeric,
    #[serde(rename = "lp-closed-form")]
    LpClosedForm,
    #[serde(rename = "lift-numeric")]
    LiftNumeric,
    #[serde(rename = "lift-closed-form")]
    LiftClosedForm,
    #[serde(rename = "geodesic")]
    Geodesic,
}

/// Initial state: either a Lie-Poisson point {"a", "x", "y", "mu"} or a
/// cotangent point {"q", "p"}; the field names disambiguate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialState {
    Lp(LPlusPoint),
    Lift(CotangentPoint),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    params: DeformationParams,
    initial: InitialState,
    t_span: (f64, f64),
    #[serde(default)]
    tol: ToleranceSpec,
    mode: Mode,
    output: PathBuf,
    #[serde(default)]
    seed: u64,
}

enum CliError {
    Config(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Solver(m) => m,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn solver_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config } => cmd_simulate(&config),
        Command::Verify { suite, seed, count } => return cmd_verify(&suite, seed, count),
        Command::Classify {
            point,
            lambda,
            alpha,
        } => cmd_classify(&point, lambda, alpha),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Number of grid rows written for closed-form trajectories.
const GRID_POINTS: usize = 201;

fn grid(t_span: (f64, f64)) -> Vec<f64> {
    let (t0, t1) = t_span;
    (0..GRID_POINTS)
        .map(|k| t0 + (t1 - t0) * k as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(config_err)?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(config_err)?;
    cfg.params.validate().map_err(config_err)?;
    if !(cfg.tol.rtol > 0.0 && cfg.tol.atol > 0.0) {
        return Err(CliError::Config("tolerances must be positive".to_string()));
    }
    match (cfg.mode, cfg.initial) {
        (Mode::LpNumeric | Mode::LpClosedForm, InitialState::Lp(_)) => {}
        (Mode::LiftNumeric | Mode::LiftClosedForm | Mode::Geodesic, InitialState::Lift(_)) => {}
        _ => {
            return Err(CliError::Config(
                "initial-state kind does not match the mode (lp-* modes take \
                 {a, x, y, mu}; lift-*/geodesic take {q, p})"
                    .to_string(),
            ))
        }
    }
    if cfg.mode == Mode::Geodesic && (cfg.params.gamma != 1.0 || cfg.params.epsilon != cfg.params.lambda)
    {
        return Err(CliError::Config(
            "geodesic mode requires gamma = 1 and epsilon = lambda".to_string(),
        ));
    }
    Ok(cfg)
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(solver_err)
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".constants.json");
    output.with_file_name(name)
}

fn print_drift(labels: &[&str], rows: &[Vec<f64>]) {
    let Some(first) = rows.first() else { return };
    let mut worst = 0.0_f64;
    for (i, label) in labels.iter().enumerate() {
        let drift = rows
            .iter()
            .map(|r| (r[i] - first[i]).abs() / first[i].abs().max(1.0))
            .fold(0.0_f64, f64::max);
        println!("drift {label} = {drift:e}");
        worst = worst.max(drift);
    }
    println!("max drift = {worst:e}");
}

fn lift_conserved(pt: &CotangentPoint, params: &DeformationParams) -> Result<Vec<f64>, CliError> {
    let d = momentum_i(pt, params).map_err(solver_err)?;
    Ok(vec![
        d.d1,
        d.d2,
        d.d3,
        d.casimir(),
        so5def::lift::lifted_hamiltonian_h(pt, params),
    ])
}

const LIFT_LABELS: [&str; 5] = ["d1", "d2", "d3", "delta", "h"];

fn cmd_simulate(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let params = cfg.params;
    match (cfg.mode, cfg.initial) {
        (Mode::LpNumeric, InitialState::Lp(pt)) => {
            let traj =
                dynamics::integrate(&pt, cfg.t_span, &params, cfg.tol).map_err(solver_err)?;
            write_output(&cfg.output, &trajectory_csv(&traj, &params).map_err(solver_err)?)?;
            let rows: Vec<Vec<f64>> =
                traj.conserved.iter().map(|c| c.as_array().to_vec()).collect();
            print_drift(&ConservedSet::LABELS, &rows);
        }
        (Mode::LpClosedForm, InitialState::Lp(pt)) => {
            let sol =
                ClosedFormSolution::new(&pt, &params, cfg.t_span).map_err(solver_err)?;
            let times = grid(cfg.t_span);
            let states: Vec<LPlusPoint> = times
                .iter()
                .map(|&t| sol.point_at(t))
                .collect::<Result<_, _>>()
                .map_err(solver_err)?;
            write_output(
                &cfg.output,
                &lp_trajectory_csv(&times, &states, &params).map_err(solver_err)?,
            )?;
            let sidecar = ClosedFormSidecar::for_reduced(sol.constants(), sol.flip_times());
            write_output(
                &sidecar_path(&cfg.output),
                &serde_json::to_string_pretty(&sidecar).map_err(solver_err)?,
            )?;
            let rows: Vec<Vec<f64>> = states
                .iter()
                .map(|s| ConservedSet::compute(s, &params).as_array().to_vec())
                .collect();
            print_drift(&ConservedSet::LABELS, &rows);
        }
        (Mode::LiftNumeric, InitialState::Lift(pt)) => {
            let rhs = move |_t: f64, z: &[f64]| {
                lifted_rhs(&CotangentPoint::from_vec10(z), &params)
                    .to_vec10()
                    .to_vec()
            };
            let sol = ode_solve(rhs, &pt.to_vec10(), cfg.t_span, cfg.tol).map_err(solver_err)?;
            let times = sol.step_times();
            let states: Vec<CotangentPoint> = times
                .iter()
                .map(|&t| CotangentPoint::from_vec10(&sol.eval(t)))
                .collect();
            write_output(
                &cfg.output,
                &lift_trajectory_csv(&times, &states, &params).map_err(solver_err)?,
            )?;
            let rows: Vec<Vec<f64>> = states
                .iter()
                .map(|s| lift_conserved(s, &params))
                .collect::<Result<_, _>>()?;
            print_drift(&LIFT_LABELS, &rows);
        }
        (Mode::LiftClosedForm, InitialState::Lift(pt)) => {
            let j0 = momentum_j(&pt, &params).map_err(solver_err)?;
            let times = grid(cfg.t_span);
            let (states, sidecar): (Vec<CotangentPoint>, ClosedFormSidecar) =
                if j0.a.abs() > 1e-10 {
                    let sol = ClosedFormSolution::new(&j0, &params, cfg.t_span)
                        .map_err(solver_err)?;
                    let xy = |t: f64| {
                        let p = sol.point_at(t)?;
                        Ok((p.x, p.y))
                    };
                    let states = times
                        .iter()
                        .map(|&t| reconstruct_qp(&pt, t, &params, Some(&xy)))
                        .collect::<Result<_, _>>()
                        .map_err(solver_err)?;
                    (
                        states,
                        ClosedFormSidecar::for_reduced(sol.constants(), sol.flip_times()),
                    )
                } else {
                    let data = a_zero_data(&j0, &params).map_err(solver_err)?;
                    let states = times
                        .iter()
                        .map(|&t| reconstruct_qp(&pt, t, &params, None))
                        .collect::<Result<_, _>>()
                        .map_err(solver_err)?;
                    (states, ClosedFormSidecar::for_a_zero(&data, &[]))
                };
            write_output(
                &cfg.output,
                &lift_trajectory_csv(&times, &states, &params).map_err(solver_err)?,
            )?;
            write_output(
                &sidecar_path(&cfg.output),
                &serde_json::to_string_pretty(&sidecar).map_err(solver_err)?,
            )?;
            let rows: Vec<Vec<f64>> = states
                .iter()
                .map(|s| lift_conserved(s, &params))
                .collect::<Result<_, _>>()?;
            print_drift(&LIFT_LABELS, &rows);
        }
        (Mode::Geodesic, InitialState::Lift(pt)) => {
            let times = grid(cfg.t_span);
            let states: Vec<CotangentPoint> = times
                .iter()
                .map(|&t| geodesic_flow(&pt, t, &params))
                .collect::<Result<_, _>>()
                .map_err(solver_err)?;
            write_output(
                &cfg.output,
                &lift_trajectory_csv(&times, &states, &params).map_err(solver_err)?,
            )?;
            let rows: Vec<Vec<f64>> = states
                .iter()
                .map(|s| lift_conserved(s, &params))
                .collect::<Result<_, _>>()?;
            print_drift(&LIFT_LABELS, &rows);
        }
        _ => unreachable!("mode/initial compatibility checked at load"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(suite: &str, seed: u64, count: usize) -> ExitCode {
    let workers = std::env::var("SO5_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1);
    match run_suite(suite, seed, count, workers) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClassifyOutput {
    algebra: String,
    regular: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signature: Option<String>,
    orbit_label: String,
}

fn cmd_classify(point: &Path, lambda: f64, alpha: f64) -> Result<(), CliError> {
    let text = std::fs::read_to_string(point).map_err(config_err)?;
    let pt: CotangentPoint = serde_json::from_str(&text).map_err(config_err)?;
    if !pt.is_finite() {
        return Err(CliError::Config("point has non-finite entries".to_string()));
    }
    let params = DeformationParams::bracket_only(lambda, alpha);
    params.require_nondegenerate().map_err(config_err)?;
    let out = if is_regular(&pt, &params).map_err(solver_err)? {
        let report = orbit_report(&pt, &params).map_err(solver_err)?;
        ClassifyOutput {
            algebra: report.algebra,
            regular: true,
            s: Some(report.s),
            signature: Some(report.signature),
            orbit_label: report.orbit_label,
        }
    } else {
        ClassifyOutput {
            algebra: classify_algebra(lambda, alpha).to_string(),
            regular: false,
            s: None,
            signature: None,
            orbit_label: "J^-1(0) stratum".to_string(),
        }
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}
