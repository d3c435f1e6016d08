//! One implicit Voigt-Stokes solve on P2/P1 Taylor-Hood elements: a
//! gradient load is absorbed by the pressure, a rotational load drives a
//! discretely divergence-free velocity.

use std::sync::Arc;

use nsvoigt::fem::assembly::{assemble_a_alpha, load_vector};
use nsvoigt::fem::MixedSpace;
use nsvoigt::field::ConstantField;
use nsvoigt::mesh::{BoxDomain, Mesh};
use nsvoigt::saddle::SaddleSolver;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn main() -> nsvoigt::Result<()> {
    for dim in [2, 3] {
        let n = if dim == 2 { 16 } else { 4 };
        let space = MixedSpace::new(Arc::new(Mesh::build_structured(&BoxDomain::unit(dim), n)?));
        let a = assemble_a_alpha(&space, 0.3)?;
        let t0 = std::time::Instant::now();
        let solver = SaddleSolver::new(&space, &a)?;
        println!(
            "{dim}D n={n}: {} velocity + {} pressure dofs, factorized in {:.1?} (fill {})",
            space.n_vel(),
            space.n_pre(),
            t0.elapsed(),
            solver.fill()
        );

        // f = ∇(x + 2y): velocity vanishes, pressure is the potential
        let grad = load_vector(&space, &ConstantField([1.0, 2.0, 0.0]), 0.0);
        let s = solver.solve(&grad);
        println!("  gradient load:   max |u| = {:.2e}", max_abs(&s.velocity));

        // a load that is not a gradient
        let f: Vec<f64> = (0..space.n_vel()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
        let s = solver.solve(&f);
        let div = space.saddle_layout().div().mul_vec(&s.velocity);
        println!(
            "  rotational load: max |u| = {:.3e}, max |B u| = {:.2e}",
            max_abs(&s.velocity),
            max_abs(&div)
        );
    }
    Ok(())
}
