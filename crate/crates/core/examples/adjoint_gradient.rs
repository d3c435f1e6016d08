//! Checks the adjoint gradient of the reduced cost against central
//! differences along a random direction: the error falls like ε².

use std::sync::Arc;

use nsvoigt::control::inner;
use nsvoigt::fem::MixedSpace;
use nsvoigt::mesh::{BoxDomain, Mesh};
use nsvoigt::optimize::ReducedProblem;
use nsvoigt::state::SolverOptions;
use nsvoigt::time::TimeGrid;
use nsvoigt::verification::build_case;
use nsvoigt::verification::study::{control_problem_data, ControlSetup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nsvoigt::Result<()> {
    let case = build_case("taylor-green-2d")?;
    let data = control_problem_data(&case, &ControlSetup::default())?;
    let space = MixedSpace::new(Arc::new(Mesh::build_structured(&BoxDomain::unit(2), 4)?));
    let grid = TimeGrid::uniform(data.t_end, 6)?;
    let p = ReducedProblem::new(&data, &space, &grid, SolverOptions::tight())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u: Vec<f64> = (0..p.control_len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let v: Vec<f64> = (0..p.control_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eval = p.evaluate(&u)?;
    let (_, g) = p.gradient(&eval, &u)?;
    let dj = inner(&g, &v, p.weights());
    println!("J(u) = {:.10e}, J'(u)v = {dj:.10e}", eval.objective());
    println!("eps       central difference     relative error");
    for eps in [1e-1, 1e-2, 1e-3] {
        let shifted = |s: f64| -> nsvoigt::Result<f64> {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            p.objective(&w)
        };
        let fd = (shifted(eps)? - shifted(-eps)?) / (2.0 * eps);
        println!("{eps:.0e}    {fd:.14e}   {:.3e}", ((fd - dj) / dj).abs());
    }
    Ok(())
}
