//! Drives the library from a TOML configuration with expression-valued
//! data, the same path the `nsvoigt` binary takes.

use std::sync::Arc;

use nsvoigt::fem::MixedSpace;
use nsvoigt::io::{Purpose, RunConfig};
use nsvoigt::state::{Forcing, StateSolver};

const CONFIG: &str = r#"
[problem]
nu = 0.05
alpha = 0.25
t_end = 0.5
y0 = ["x^2*(1-x)^2*2*y*(1-y)*(1-2*y)", "-y^2*(1-y)^2*2*x*(1-x)*(1-2*x)"]
forcing = ["cos(2*pi*t)*sin(pi*y)", "0"]

[discretization]
dim = 2
n = 6
coupling = "tau-h"
"#;

fn main() -> nsvoigt::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let data = cfg.problem_data(Purpose::State)?;
    let mesh = cfg.mesh()?;
    let grid = cfg.time_grid(data.t_end, mesh.h())?;
    let space = MixedSpace::new(Arc::clone(&mesh));
    let forcing = cfg.forcing(space.dim())?.expect("forcing given");
    let solver = StateSolver::new(&data, &space, cfg.solver_options())?;
    let traj = solver.solve(&grid, Forcing::Field(forcing.as_ref()))?;
    println!("h = {:.4e}, tau = {:.4e}, {} steps", mesh.h(), grid.tau_max(), grid.n_steps());
    for n in 0..=grid.n_steps() {
        println!("t = {:.4}  energy = {:.6e}", grid.t(n), solver.energy(traj.snapshot(n)));
    }
    Ok(())
}
