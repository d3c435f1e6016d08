mod common;

use common::*;
use nsvoigt::adjoint::{discrete_target, duality_pairing, gradient, objective_parts, solve_adjoint};
use nsvoigt::control::control_weights;
use nsvoigt::problem::{BoxBounds, ProblemData};
use nsvoigt::state::{Forcing, SolverOptions, StateSolver};
use nsvoigt::time::TimeGrid;

fn tracking_data() -> ProblemData {
    ProblemData::new(0.05, 0.3, 1e-2, 1.0, 1.0, 0.5, BoxBounds::uniform(2, -5.0, 5.0).unwrap())
        .unwrap()
        .with_initial(vortex(1.0))
        .with_targets(vortex(-0.5), wavy_target())
}

// Strongly convective regime, so the O(ε²) truncation error stays above
// rounding down to ε = 1e-4.
fn convective_data() -> ProblemData {
    ProblemData::new(0.01, 0.1, 1e-2, 1.0, 1.0, 0.5, BoxBounds::uniform(2, -50.0, 50.0).unwrap())
        .unwrap()
        .with_initial(vortex(2.0))
        .with_targets(vortex(-0.5), vortex(0.3))
}

#[test]
fn gradient_matches_central_differences() {
    let space = unit_space(2, 4);
    let data = convective_data();
    let grid = TimeGrid::uniform(data.t_end, 6).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::tight()).unwrap();
    let yt = discrete_target(&solver).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let w = control_weights(&grid, space.mesh());
    let mut rng = rng(5);
    let u = uniform(&mut rng, len, -2.0, 2.0);
    let v = uniform(&mut rng, len, -100.0, 100.0);
    let j = |c: &[f64]| {
        let s = solver.solve(&grid, Forcing::Cellwise(c)).unwrap();
        objective_parts(&solver, &s, &yt, c).total()
    };
    let state = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    let adj = solve_adjoint(&solver, &state, &yt).unwrap();
    let g = gradient(&solver, &adj, &u);
    let dj: f64 = g.iter().zip(&v).zip(&w).map(|((a, b), c)| a * b * c).sum();
    let mut errs = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let fd = (j(&up) - j(&um)) / (2.0 * eps);
        errs.push(((fd - dj) / dj).abs());
    }
    assert!(errs[2] <= 1e-5);
    assert!(loglog_slope(&[1e-2, 1e-3, 1e-4], &errs) >= 1.9, "{errs:?}");
}

#[test]
fn duality_identity_holds() {
    let space = unit_space(2, 4);
    let data = tracking_data();
    let grid = TimeGrid::uniform(data.t_end, 5).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let yt = discrete_target(&solver).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let mut rng = rng(9);
    let u = uniform(&mut rng, len, -1.0, 1.0);
    let state = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    let adj = solve_adjoint(&solver, &state, &yt).unwrap();
    for _ in 0..3 {
        let v = uniform(&mut rng, len, -1.0, 1.0);
        let z = solver.solve_linearized(&state, Forcing::Cellwise(&v)).unwrap();
        let (lhs, rhs) = duality_pairing(&solver, &state, &adj, &yt, &v, &z);
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()), "{lhs} {rhs}");
    }
}

#[test]
fn zero_data_gives_zero_state_and_energy_decays() {
    let space = unit_space(2, 4);
    let zero = ProblemData::new(0.1, 0.5, 1.0, 1.0, 0.0, 1.0, BoxBounds::unbounded(2)).unwrap();
    let grid = TimeGrid::uniform(1.0, 5).unwrap();
    let solver = StateSolver::new(&zero, &space, SolverOptions::default()).unwrap();
    let s = solver.solve(&grid, Forcing::Zero).unwrap();
    assert!(s.snapshots().iter().flatten().all(|v| *v == 0.0));

    let data = zero.clone().with_initial(vortex(3.0));
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let s = solver.solve(&grid, Forcing::Zero).unwrap();
    let e: Vec<f64> = s.snapshots().iter().map(|y| solver.energy(y)).collect();
    for w in e.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "{e:?}");
    }
    let b = space.saddle_layout().div();
    for y in s.snapshots() {
        assert!(b.mul_vec(y).iter().all(|v| v.abs() < 1e-10));
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn newton_converges_quadratically_and_picard_linearly() {
    let space = unit_space(2, 4);
    let data = convective_data();
    let grid = TimeGrid::uniform(data.t_end, 2).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::tight()).unwrap();
    let y0 = solver.initial_state().unwrap();
    let len = space.mesh().n_cells() * 2;
    let u = uniform(&mut rng(1), len * 2, -2.0, 2.0);
    let f = Forcing::Cellwise(&u).load(&space, &grid, 1);
    let q0 = vec![0.0; space.n_pre()];
    let (y, _, report) = solver.solve_step(1, grid.tau(1), &y0, &f, &q0).unwrap();
    let r = &report.residuals;
    assert_eq!(report.picard_iterations, 0);
    let mut checked = 0;
    for w in r.windows(2) {
        if w[0] < 0.1 && w[1] > 1e-13 {
            assert!(w[1] <= 10.0 * w[0] * w[0], "{r:?}");
            checked += 1;
        }
    }
    assert!(checked >= 2, "{r:?}");

    // the converged iterate is a fixed point of the Newton map
    let upd = solver.newton_step_state(grid.tau(1), &y0, &f, &y).unwrap();
    assert!(upd.correction <= 1e-10, "{}", upd.correction);

    let picard = StateSolver::new(
        &data,
        &space,
        SolverOptions {
            force_picard: true,
            ..SolverOptions::tight()
        },
    )
    .unwrap();
    let (yp, _, rp) = picard.solve_step(1, grid.tau(1), &y0, &f, &q0).unwrap();
    assert!(rp.picard_iterations > report.newton_iterations);
    let res = &rp.residuals;
    // linear contraction: the rate stays below one once the iteration settles
    for w in res[1..].windows(2) {
        if w[1] > 1e-12 {
            assert!(w[1] < w[0], "{res:?}");
        }
    }
    let d: f64 = y.iter().zip(&yp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-10, "{d}");
}

#[test]
fn linearized_state_is_linear_and_matches_taylor_expansion() {
    let space = unit_space(2, 4);
    let data = tracking_data();
    let grid = TimeGrid::uniform(data.t_end, 4).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::tight()).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let mut rng = rng(2);
    let u = uniform(&mut rng, len, -1.0, 1.0);
    let v1 = uniform(&mut rng, len, -3.0, 3.0);
    let v2 = uniform(&mut rng, len, -3.0, 3.0);
    let base = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();

    let zero = vec![0.0; len];
    let z0 = solver.solve_linearized(&base, Forcing::Cellwise(&zero)).unwrap();
    assert!(z0.snapshots().iter().flatten().all(|v| *v == 0.0));

    let z1 = solver.solve_linearized(&base, Forcing::Cellwise(&v1)).unwrap();
    let z2 = solver.solve_linearized(&base, Forcing::Cellwise(&v2)).unwrap();
    let comb: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let zc = solver.solve_linearized(&base, Forcing::Cellwise(&comb)).unwrap();
    let expect: Vec<Vec<f64>> = z1
        .snapshots()
        .iter()
        .zip(z2.snapshots())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 2.0 * x - 0.5 * y).collect())
        .collect();
    let scale = norm(&expect.concat());
    assert!(diff_norm(zc.snapshots(), &expect) <= 1e-11 * scale);

    let eps = [1e-1, 1e-2, 1e-3];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let ue: Vec<f64> = u.iter().zip(&v1).map(|(a, b)| a + e * b).collect();
            let ye = solver.solve(&grid, Forcing::Cellwise(&ue)).unwrap();
            let lin: Vec<Vec<f64>> = base
                .snapshots()
                .iter()
                .zip(z1.snapshots())
                .map(|(y, z)| y.iter().zip(z).map(|(a, b)| a + e * b).collect())
                .collect();
            diff_norm(ye.snapshots(), &lin)
        })
        .collect();
    assert!(loglog_slope(&eps, &errs) >= 1.9, "{errs:?}");
}

#[test]
fn adjoint_matrix_is_transpose_and_zero_data_gives_zero_adjoint() {
    let space = unit_space(2, 3);
    let mut data = tracking_data();
    let grid = TimeGrid::uniform(data.t_end, 3).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let u = uniform(&mut rng(4), len, -1.0, 1.0);
    let state = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    let y = state.snapshot(2);
    let l = solver.linearized_step_matrix(0.1, y).transpose();
    let a = solver.adjoint_step_matrix(0.1, y);
    let scale = a.max_abs();
    for i in 0..space.n_vel() {
        for &j in a.pattern().row(i) {
            assert!((a.get(i, j) - l.get(i, j)).abs() <= 1e-13 * scale);
        }
    }

    data.alpha_t = 0.0;
    data.alpha_q = 0.0;
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let yt = discrete_target(&solver).unwrap();
    let adj = solve_adjoint(&solver, &state, &yt).unwrap();
    for n in 1..=grid.n_steps() + 1 {
        assert!(adj.snapshot(n).iter().all(|v| *v == 0.0));
    }
    let g = gradient(&solver, &adj, &u);
    for (gi, ui) in g.iter().zip(&u) {
        assert_eq!(*gi, data.gamma * ui);
    }

    data.alpha_t = 1.0;
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let adj = solve_adjoint(&solver, &state, state.final_state()).unwrap();
    assert!(adj.snapshot(1).iter().all(|v| *v == 0.0));
}

#[test]
fn objective_basic_properties() {
    let space = unit_space(2, 3);
    let grid = TimeGrid::uniform(1.0, 3).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let mut data = ProblemData::new(0.1, 0.5, 0.3, 1.0, 1.0, 1.0, BoxBounds::unbounded(2)).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let zero = vec![0.0; len];
    let s = solver.solve(&grid, Forcing::Cellwise(&zero)).unwrap();
    let yt = discrete_target(&solver).unwrap();
    assert_eq!(objective_parts(&solver, &s, &yt, &zero).total(), 0.0);

    data.alpha_t = 0.0;
    data.alpha_q = 0.0;
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let u = uniform(&mut rng(3), len, -1.0, 1.0);
    let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
    let s1 = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    let s2 = solver.solve(&grid, Forcing::Cellwise(&u2)).unwrap();
    let j1 = objective_parts(&solver, &s1, &yt, &u).total();
    let j2 = objective_parts(&solver, &s2, &yt, &u2).total();
    assert!(j1 > 0.0);
    assert!((j2 - 4.0 * j1).abs() <= 1e-14 * j2);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let space = unit_space(2, 3);
    let data = tracking_data();
    let grid = TimeGrid::uniform(data.t_end, 3).unwrap();
    let solver = StateSolver::new(&data, &space, SolverOptions::default()).unwrap();
    let len = grid.n_steps() * space.mesh().n_cells() * 2;
    let u = uniform(&mut rng(8), len, -1.0, 1.0);
    let a = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    let b = solver.solve(&grid, Forcing::Cellwise(&u)).unwrap();
    assert_eq!(a.snapshots(), b.snapshots());
}
