//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 solver failure, 4 optimizer stopped before convergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::adjoint::{discrete_target, solve_adjoint};
use crate::control::Control;
use crate::error::Error;
use crate::fem::MixedSpace;
use crate::io::{Purpose, RunConfig, VtkGrid};
use crate::optimize::{optimize, OptimizeReport, ReducedProblem};
use crate::state::{Forcing, StateSolver};
use crate::verification::{h1_error, run_convergence, NormQuadrature};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_OPTIMIZER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nsvoigt", version, about = "Optimal control of the Navier-Stokes-Voigt equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; the solvers run sequentially, so any value gives
    /// the same bits.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Log solver progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// March the state equation and write snapshots.
    SolveState,
    /// Solve state and adjoint equations and write adjoint snapshots.
    SolveAdjoint,
    /// Minimize the reduced cost over the box.
    Optimize,
    /// Run a convergence study and write rates.csv.
    Convergence,
    /// Print mesh and space statistics.
    MeshInfo,
}

struct Failure {
    code: i32,
    message: String,
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    }
}

fn solver_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_SOLVER,
        message: e.to_string(),
    }
}

/// Configuration problems surface as [`Error::Config`], bad values as
/// [`Error::InvalidInput`] and unknown cases as [`Error::UnknownCase`].
fn setup_err(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::UnknownCase(_) | Error::Parse { .. } | Error::Io(_) => {
            config_err(e)
        }
        e => solver_err(e),
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Outcome {
    if cli.threads == 0 {
        return Err(config_err("--threads must be at least 1"));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config_err("--config <path> is required"))?;
    let cfg = RunConfig::load(path).map_err(config_err)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir());
    match cli.command {
        Command::SolveState => solve_state_cmd(&cfg, &out),
        Command::SolveAdjoint => solve_adjoint_cmd(&cfg, &out),
        Command::Optimize => optimize_cmd(&cfg, &out),
        Command::Convergence => convergence_cmd(&cfg, &out),
        Command::MeshInfo => mesh_info_cmd(&cfg),
    }
}

fn create_dir(out: &Path) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))
}

fn write(path: PathBuf, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(&path, text).map_err(|e| solver_err(format!("cannot write {}: {e}", path.display())))
}

fn save(grid: &VtkGrid, path: PathBuf) -> std::result::Result<(), Failure> {
    grid.save(&path).map_err(|e| solver_err(format!("cannot write {}: {e}", path.display())))
}

struct Setup {
    space: Arc<MixedSpace>,
    grid: crate::time::TimeGrid,
}

fn setup(cfg: &RunConfig, data_t_end: f64) -> std::result::Result<Setup, Failure> {
    let mesh = cfg.mesh().map_err(setup_err)?;
    let grid = cfg.time_grid(data_t_end, mesh.h()).map_err(setup_err)?;
    Ok(Setup {
        space: MixedSpace::new(mesh),
        grid,
    })
}

fn solve_state_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let data = cfg.problem_data(Purpose::State).map_err(setup_err)?;
    let Setup { space, grid } = setup(cfg, data.t_end)?;
    let forcing = cfg.forcing(space.dim()).map_err(setup_err)?;
    create_dir(out)?;
    let solver = StateSolver::new(&data, &space, cfg.solver_options()).map_err(setup_err)?;
    let f = match &forcing {
        Some(f) => Forcing::Field(f.as_ref()),
        None => Forcing::Zero,
    };
    let traj = solver.solve(&grid, f).map_err(solver_err)?;

    let mut diag = String::from("step,newton_iterations,picard_iterations,initial_residual,final_residual\n");
    for r in traj.reports() {
        let first = r.residuals.first().copied().unwrap_or(0.0);
        let last = r.residuals.last().copied().unwrap_or(0.0);
        writeln!(diag, "{},{},{},{first:.16e},{last:.16e}", r.step, r.newton_iterations, r.picard_iterations).unwrap();
    }
    write(out.join("diagnostics.csv"), &diag)?;
    if cfg.write_vtk() {
        for n in cfg.snapshot_indices(0, grid.n_steps()) {
            let mut g = VtkGrid::from_space(&space, &format!("state step {n} t={:.16e}", grid.t(n)));
            g.add_velocity("velocity", &space, traj.snapshot(n)).map_err(solver_err)?;
            if n > 0 {
                g.add_pressure("pressure", &space, &traj.pressure(n)).map_err(solver_err)?;
            }
            save(&g, out.join(format!("state_{n:04}.vtk")))?;
        }
    }
    println!("steps={} tau={:.6e} h={:.6e} velocity_dofs={}", grid.n_steps(), grid.tau_max(), space.mesh().h(), space.n_vel());
    println!("energy_final={:.16e}", solver.energy(traj.final_state()));
    if let Some(case) = cfg.case().map_err(setup_err)? {
        let rule = NormQuadrature::standard(space.dim()).space_rule;
        let e = h1_error(&space, traj.final_state(), case.velocity().as_ref(), data.t_end, &rule).map_err(solver_err)?;
        println!("final_h1_error={e:.16e}");
    }
    Ok(EXIT_OK)
}

fn solve_adjoint_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let data = cfg.problem_data(Purpose::Adjoint).map_err(setup_err)?;
    let Setup { space, grid } = setup(cfg, data.t_end)?;
    let forcing = cfg.forcing(space.dim()).map_err(setup_err)?;
    create_dir(out)?;
    let solver = StateSolver::new(&data, &space, cfg.solver_options()).map_err(setup_err)?;
    let f = match &forcing {
        Some(f) => Forcing::Field(f.as_ref()),
        None => Forcing::Zero,
    };
    let state = solver.solve(&grid, f).map_err(solver_err)?;
    let yt = discrete_target(&solver).map_err(solver_err)?;
    let adj = solve_adjoint(&solver, &state, &yt).map_err(solver_err)?;
    let nt = grid.n_steps();
    if cfg.write_vtk() {
        for n in cfg.snapshot_indices(1, nt + 1) {
            let mut g = VtkGrid::from_space(&space, &format!("adjoint index {n}"));
            g.add_velocity("adjoint", &space, adj.snapshot(n)).map_err(solver_err)?;
            let p: Vec<f64> = adj.multiplier(n).iter().map(|q| -q).collect();
            g.add_pressure("adjoint_pressure", &space, &p).map_err(solver_err)?;
            save(&g, out.join(format!("adjoint_{n:04}.vtk")))?;
        }
    }
    println!("steps={nt} tau={:.6e} h={:.6e} velocity_dofs={}", grid.tau_max(), space.mesh().h(), space.n_vel());
    if let Some(case) = cfg.case().map_err(setup_err)? {
        let rule = NormQuadrature::standard(space.dim()).space_rule;
        let e = h1_error(&space, adj.snapshot(1), case.adjoint().as_ref(), 0.0, &rule).map_err(solver_err)?;
        println!("initial_adjoint_h1_error={e:.16e}");
    }
    Ok(EXIT_OK)
}

/// `key=value` lines of the KKT audit.
pub fn kkt_summary(r: &OptimizeReport, tol: f64) -> String {
    let k = &r.kkt;
    let mut s = String::new();
    writeln!(s, "termination={:?}", r.termination).unwrap();
    writeln!(s, "iterations={}", r.iterations()).unwrap();
    writeln!(s, "objective={:.16e}", r.final_objective()).unwrap();
    writeln!(s, "stationarity={:.6e}", k.stationarity).unwrap();
    writeln!(s, "max_infeasibility={:.6e}", k.max_infeasibility).unwrap();
    writeln!(s, "max_interior_gradient={:.6e}", k.max_interior_gradient).unwrap();
    writeln!(s, "min_gradient_at_lower={:.6e}", k.min_gradient_at_lower).unwrap();
    writeln!(s, "max_gradient_at_upper={:.6e}", k.max_gradient_at_upper).unwrap();
    writeln!(s, "interior={} at_lower={} at_upper={}", k.n_interior, k.n_lower, k.n_upper).unwrap();
    writeln!(s, "kkt={}", if k.holds(tol) { "PASS" } else { "FAIL" }).unwrap();
    s
}

fn optimize_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let data = cfg.problem_data(Purpose::Optimize).map_err(setup_err)?;
    let Setup { space, grid } = setup(cfg, data.t_end)?;
    let opts = cfg.optimize_options();
    let u0 = Control::constant(
        grid.clone(),
        space.mesh().clone(),
        data.bounds.clone(),
        &cfg.initial_control(space.dim()).map_err(setup_err)?,
    )
    .map_err(setup_err)?;
    create_dir(out)?;
    let problem = ReducedProblem::new(&data, &space, &grid, cfg.solver_options()).map_err(setup_err)?;
    let report = optimize(&problem, &u0, &opts).map_err(solver_err)?;

    write(out.join("report.csv"), &report.to_csv())?;
    let summary = kkt_summary(&report, opts.tol);
    write(out.join("kkt.txt"), &summary)?;
    if cfg.write_vtk() {
        let dim = space.dim();
        let len = space.mesh().n_cells() * dim;
        for n in cfg.snapshot_indices(1, grid.n_steps()) {
            let mut g = VtkGrid::from_space(&space, &format!("optimize step {n} t={:.16e}", grid.t(n)));
            g.add_velocity("state", &space, report.state.snapshot(n)).map_err(solver_err)?;
            g.add_velocity("adjoint", &space, report.adjoint.snapshot(n)).map_err(solver_err)?;
            g.add_pressure("pressure", &space, &report.state.pressure(n)).map_err(solver_err)?;
            g.add_cell_vector("control", dim, report.control.step(n)).map_err(solver_err)?;
            g.add_cell_vector("gradient", dim, &report.gradient[(n - 1) * len..n * len]).map_err(solver_err)?;
            save(&g, out.join(format!("fields_{n:04}.vtk")))?;
        }
    }
    print!("{summary}");
    Ok(if report.converged() { EXIT_OK } else { EXIT_OPTIMIZER })
}

fn convergence_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let study = cfg.study_config().map_err(setup_err)?;
    study.validate().map_err(setup_err)?;
    create_dir(out)?;
    let thresholds = study.thresholds();
    match run_convergence(&study) {
        Ok(table) => {
            write(out.join("rates.csv"), &table.to_csv())?;
            for line in table.summary(&thresholds) {
                println!("{line}");
            }
            Ok(EXIT_OK)
        }
        Err(f) => {
            write(out.join("rates.csv"), &f.table.to_csv())?;
            Err(solver_err(f))
        }
    }
}

fn mesh_info_cmd(cfg: &RunConfig) -> Outcome {
    let mesh = cfg.mesh().map_err(setup_err)?;
    let q = mesh.quality();
    let space = MixedSpace::new(mesh.clone());
    println!("dim={}", mesh.dim());
    println!("vertices={}", mesh.n_vertices());
    println!("cells={}", mesh.n_cells());
    println!("boundary_facets={}", mesh.n_boundary_facets());
    println!("h={:.6e}", mesh.h());
    println!("shape_regularity={:.6e}", q.shape_regularity);
    println!("quasi_uniformity={:.6e}", q.quasi_uniformity);
    println!("volume={:.16e}", q.volume);
    println!("velocity_dofs={}", space.n_vel());
    println!("pressure_dofs={}", space.n_pre());
    Ok(EXIT_OK)
}
