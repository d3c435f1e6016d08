//! Solves a box-constrained tracking problem with the projected gradient
//! method and audits the discrete optimality conditions.

use std::sync::Arc;

use nsvoigt::control::Control;
use nsvoigt::fem::MixedSpace;
use nsvoigt::mesh::{BoxDomain, Mesh};
use nsvoigt::optimize::{optimize, OptimizeOptions, ReducedProblem};
use nsvoigt::state::SolverOptions;
use nsvoigt::time::TimeGrid;
use nsvoigt::verification::build_case;
use nsvoigt::verification::study::{control_problem_data, ControlSetup};

fn main() -> nsvoigt::Result<()> {
    let case = build_case("poly-sine-2d")?;
    let setup = ControlSetup {
        gamma: 1e-2,
        bound: 1.0,
        ..ControlSetup::default()
    };
    let data = control_problem_data(&case, &setup)?;
    let space = MixedSpace::new(Arc::new(Mesh::build_structured(&BoxDomain::unit(2), 8)?));
    let grid = TimeGrid::uniform(data.t_end, 8)?;
    let p = ReducedProblem::new(&data, &space, &grid, SolverOptions::default())?;
    let u0 = Control::zeros(grid, space.mesh().clone(), data.bounds.clone())?;
    let r = optimize(&p, &u0, &OptimizeOptions::default())?;

    println!("iter  objective            stationarity");
    for (k, (j, s)) in r.objective.iter().zip(&r.stationarity).enumerate() {
        println!("{k:>4}  {j:.14e}  {s:.3e}");
    }
    let k = &r.kkt;
    println!("termination: {:?}", r.termination);
    println!(
        "cells at lower bound {}, at upper bound {}, interior {}",
        k.n_lower, k.n_upper, k.n_interior
    );
    println!(
        "min gradient at lower {:.2e}, max gradient at upper {:.2e}, KKT within 1e-8: {}",
        k.min_gradient_at_lower,
        k.max_gradient_at_upper,
        k.holds(1e-8)
    );
    Ok(())
}
