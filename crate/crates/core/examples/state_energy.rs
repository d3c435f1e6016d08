//! Marches the uncontrolled Navier-Stokes-Voigt state from a vortex and
//! prints the Voigt energy `|y|² + α²|∇y|²`, which never increases, and the
//! Newton iteration counts per step. Writes the last snapshot as VTK.

use std::f64::consts::PI;
use std::sync::Arc;

use nsvoigt::fem::MixedSpace;
use nsvoigt::field::FnField;
use nsvoigt::io::VtkGrid;
use nsvoigt::mesh::{BoxDomain, Mesh, Point};
use nsvoigt::problem::{BoxBounds, ProblemData};
use nsvoigt::state::{Forcing, SolverOptions, StateSolver};
use nsvoigt::time::TimeGrid;

fn main() -> nsvoigt::Result<()> {
    let space = MixedSpace::new(Arc::new(Mesh::build_structured(&BoxDomain::unit(2), 8)?));
    // 2·curl of sin²(πx) sin²(πy); the initial projection needs the gradient too
    let vortex = FnField::with_gradient(
        |x: &Point, _t: f64| {
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            [
                2.0 * PI * sx * sx * (2.0 * PI * x[1]).sin(),
                -2.0 * PI * sy * sy * (2.0 * PI * x[0]).sin(),
                0.0,
            ]
        },
        |x: &Point, _t: f64| {
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            let (s2x, c2x) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[0]).cos());
            let (s2y, c2y) = ((2.0 * PI * x[1]).sin(), (2.0 * PI * x[1]).cos());
            let a = 2.0 * PI * PI;
            [
                [a * s2x * s2y, 2.0 * a * sx * sx * c2y, 0.0],
                [-2.0 * a * sy * sy * c2x, -a * s2y * s2x, 0.0],
                [0.0; 3],
            ]
        },
    );
    let data = ProblemData::new(0.01, 0.3, 1.0, 1.0, 0.0, 1.0, BoxBounds::unbounded(2))?.with_initial(Arc::new(vortex));
    let solver = StateSolver::new(&data, &space, SolverOptions::default())?;
    let grid = TimeGrid::uniform(data.t_end, 20)?;
    let traj = solver.solve(&grid, Forcing::Zero)?;
    println!("step  t      energy        newton");
    println!("{:>4}  {:.2}  {:.6e}", 0, 0.0, solver.energy(traj.snapshot(0)));
    for r in traj.reports() {
        let n = r.step;
        println!("{n:>4}  {:.2}  {:.6e}  {}", grid.t(n), solver.energy(traj.snapshot(n)), r.newton_iterations);
    }
    let mut vtk = VtkGrid::from_space(&space, "final state");
    vtk.add_velocity("velocity", &space, traj.final_state())?;
    vtk.add_pressure("pressure", &space, &traj.pressure(grid.n_steps()))?;
    let path = std::env::temp_dir().join("nsvoigt_state_energy.vtk");
    vtk.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
