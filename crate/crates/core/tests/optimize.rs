mod common;

use common::*;
use nsvoigt::control::{inner, project_box, Control};
use nsvoigt::optimize::{optimize, OptimizeOptions, ReducedProblem, Termination};
use nsvoigt::problem::{BoxBounds, ProblemData};
use nsvoigt::state::SolverOptions;
use nsvoigt::time::TimeGrid;

// Tracking a vortex from rest; the bound clips the control where the
// unconstrained optimum is largest.
fn box_tracking(bound: f64) -> ProblemData {
    ProblemData::new(0.05, 0.2, 1e-2, 1.0, 1.0, 0.5, BoxBounds::uniform(2, -bound, bound).unwrap())
        .unwrap()
        .with_targets(vortex(1.0), vortex(1.0))
}

fn problem(data: &ProblemData, n: usize, steps: usize) -> ReducedProblem {
    let space = unit_space(2, n);
    let grid = TimeGrid::uniform(data.t_end, steps).unwrap();
    ReducedProblem::new(data, &space, &grid, SolverOptions::default()).unwrap()
}

fn zeros(p: &ReducedProblem) -> Control {
    Control::zeros(p.grid().clone(), p.space().mesh().clone(), p.data().bounds.clone()).unwrap()
}

#[test]
fn box_constrained_tracking_reaches_kkt_point() {
    let data = box_tracking(8.0);
    let p = problem(&data, 4, 4);
    let r = optimize(&p, &zeros(&p), &OptimizeOptions::default()).unwrap();
    assert!(r.converged());
    assert!(r.is_monotone());
    assert!(r.kkt.holds(1e-8), "{:?}", r.kkt);
    assert!(r.kkt.n_lower + r.kkt.n_upper > 0 && r.kkt.n_interior > 0, "{:?}", r.kkt);
    assert!(r.control.values().iter().all(|v| v.abs() <= 8.0));
    assert_eq!(r.objective.len(), r.iterations() + 1);
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), r.iterations() + 2);
}

#[test]
fn zero_data_converges_to_zero_control() {
    let data = ProblemData::new(0.1, 0.3, 1e-1, 1.0, 1.0, 0.5, BoxBounds::uniform(2, -1.0, 2.0).unwrap()).unwrap();
    let p = problem(&data, 3, 3);
    let u0 = zeros(&p).with_values(uniform(&mut rng(3), p.control_len(), -1.0, 2.0)).unwrap();
    let r = optimize(&p, &u0, &OptimizeOptions::default()).unwrap();
    assert!(r.converged());
    assert!(r.final_objective() <= 1e-12, "{}", r.final_objective());
    // curvature is at least γ near the minimum, so ‖u‖ ≤ stationarity / γ
    assert!(r.control.l2_norm() <= 1e-8 / data.gamma, "{}", r.control.l2_norm());
}

#[test]
fn large_gamma_drives_control_to_projected_zero() {
    // With γ = 1e6 the minimizer is Proj(−λ/γ), i.e. within O(1/γ) of Proj(0).
    let mut data = box_tracking(1.0);
    data.gamma = 1e6;
    data.bounds = BoxBounds::new(vec![0.5, -1.0], vec![1.0, -0.25]).unwrap();
    let p = problem(&data, 3, 3);
    let opts = OptimizeOptions {
        tol: 1e-12,
        ..OptimizeOptions::default()
    };
    let r = optimize(&p, &zeros(&p), &opts).unwrap();
    assert!(r.converged());
    for (i, v) in r.control.values().iter().enumerate() {
        let expect = if i % 2 == 0 { 0.5 } else { -0.25 };
        assert!((v - expect).abs() <= 1e-5, "{v}");
    }
}

#[test]
fn iteration_cap_returns_best_iterate() {
    let data = box_tracking(8.0);
    let p = problem(&data, 3, 3);
    let opts = OptimizeOptions {
        max_iterations: 2,
        ..OptimizeOptions::default()
    };
    let r = optimize(&p, &zeros(&p), &opts).unwrap();
    assert_eq!(r.termination, Termination::IterationCap);
    assert!(!r.converged());
    assert_eq!(r.iterations(), 2);
    assert!(r.final_objective() < r.objective[0]);
    assert!(r.is_monotone());
}

#[test]
fn optimizer_is_deterministic() {
    let data = box_tracking(8.0);
    let p = problem(&data, 3, 3);
    let a = optimize(&p, &zeros(&p), &OptimizeOptions::default()).unwrap();
    let b = optimize(&p, &zeros(&p), &OptimizeOptions::default()).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.control.values(), b.control.values());
}

#[test]
fn hessian_matches_second_differences() {
    let data = ProblemData::new(0.01, 0.1, 1e-2, 1.0, 1.0, 0.5, BoxBounds::unbounded(2))
        .unwrap()
        .with_initial(vortex(2.0))
        .with_targets(vortex(-0.5), vortex(0.3));
    let p = ReducedProblem::new(&data, &unit_space(2, 4), &TimeGrid::uniform(0.5, 6).unwrap(), SolverOptions::tight())
        .unwrap();
    let mut rng = rng(12);
    let u = uniform(&mut rng, p.control_len(), -2.0, 2.0);
    let v = uniform(&mut rng, p.control_len(), -100.0, 100.0);
    let e = p.evaluate(&u).unwrap();
    let (adj, _) = p.gradient(&e, &u).unwrap();
    let h = p.hessian_quadratic(&e.state, &adj, &v).unwrap();
    assert_eq!(p.hessian_quadratic(&e.state, &adj, &vec![0.0; v.len()]).unwrap(), 0.0);

    let j0 = e.objective();
    let eps = [1e-1, 3e-2, 1e-2];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&s| {
            let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - s * b).collect();
            let fd = (p.objective(&up).unwrap() - 2.0 * j0 + p.objective(&um).unwrap()) / (s * s);
            ((fd - h) / h).abs()
        })
        .collect();
    assert!(loglog_slope(&eps, &errs) >= 1.9, "{errs:?}");
}

#[test]
fn hessian_reduces_to_control_term_without_tracking() {
    let mut data = box_tracking(8.0);
    data.alpha_t = 0.0;
    data.alpha_q = 0.0;
    data.y0 = vortex(1.0);
    let p = problem(&data, 3, 3);
    let mut rng = rng(6);
    let u = uniform(&mut rng, p.control_len(), -1.0, 1.0);
    let v = uniform(&mut rng, p.control_len(), -1.0, 1.0);
    let e = p.evaluate(&u).unwrap();
    let (adj, _) = p.gradient(&e, &u).unwrap();
    let h = p.hessian_quadratic(&e.state, &adj, &v).unwrap();
    assert_eq!(h, data.gamma * inner(&v, &v, p.weights()));
}

#[test]
fn optimizer_projects_infeasible_start() {
    let data = box_tracking(8.0);
    let p = problem(&data, 2, 2);
    let mut far = vec![100.0; p.control_len()];
    let u0 = zeros(&p).with_values(far.clone()).unwrap();
    project_box(&mut far, &data.bounds);
    assert_eq!(u0.values(), &far[..]);
    let r = optimize(&p, &u0, &OptimizeOptions::default()).unwrap();
    assert!(r.converged());
}
