//! The discrete adjoint equation, the reduced objective `J_σ` and its
//! gradient.
//!
//! The terminal value solves `(λ_{N+1}, w) + α² a(λ_{N+1}, w) =
//! α_T (y_N − y_T^h, w)`; then, for `n = N, …, 1`,
//!
//! ```text
//! ((λ_n − λ_{n+1})/τ_n, w) + ν a(λ_n, w) + α² a((λ_n − λ_{n+1})/τ_n, w)
//!     + c(w, y_n, λ_n) + c(y_n, w, λ_n) = (α_Q/τ_n) ∫_{I_n} (y_n − y_Q(t), w) dt.
//! ```
//!
//! The step matrix is the transpose of the linearized-state step matrix, so
//! the gradient below is the exact derivative of `J_σ`.

use std::sync::Arc;

use crate::control::Control;
use crate::error::{Error, Result};
use crate::fem::assembly::{cell_averages, load_cellwise, load_time_average};
use crate::fem::function::velocity_at;
use crate::fem::{CellEval, FeFunction, MixedSpace};
use crate::field::VectorField;
use crate::quadrature::gauss_interval;
use crate::saddle::SaddleSolver;
use crate::sparse::{axpy, dot};
use crate::state::{StateSolver, StateTrajectory};
use crate::time::TimeGrid;

/// Backward trajectory `λ_1, …, λ_{N+1}`.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    grid: TimeGrid,
    space: Arc<MixedSpace>,
    snapshots: Vec<Vec<f64>>,
    multipliers: Vec<Vec<f64>>,
}

impl AdjointTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    /// `λ_{n,h}`, `1 ≤ n ≤ N + 1`.
    pub fn snapshot(&self, n: usize) -> &[f64] {
        &self.snapshots[n - 1]
    }

    /// Divergence multiplier of `λ_n` (`n = N + 1` is the terminal solve).
    pub fn multiplier(&self, n: usize) -> &[f64] {
        &self.multipliers[n - 1]
    }

    pub fn function(&self, n: usize) -> FeFunction {
        FeFunction::from_velocity(&self.space, self.snapshots[n - 1].clone()).expect("length")
    }

    /// `λ_σ(t)`: `λ_n` inside `(t_{n−1}, t_n)` and `λ_{n+1}` at `t = t_n`.
    pub fn at(&self, t: f64) -> &[f64] {
        let nodes = self.grid.nodes();
        let n = match nodes.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => i + 1,
            Err(i) => i.clamp(1, self.grid.n_steps()),
        };
        &self.snapshots[n.min(self.grid.n_steps() + 1) - 1]
    }
}

/// `y_T^h = P_h y_T`.
pub fn discrete_target(solver: &StateSolver) -> Result<Vec<f64>> {
    let data = solver.data();
    Ok(solver.projection().project_ph(data.y_target.as_ref(), data.t_end)?.velocity)
}

/// Terminal solve followed by the backward march.
pub fn solve_adjoint(solver: &StateSolver, state: &StateTrajectory, y_target_h: &[f64]) -> Result<AdjointTrajectory> {
    let space = solver.space();
    let data = solver.data();
    let grid = state.grid();
    let nt = grid.n_steps();
    if y_target_h.len() != space.n_vel() || !Arc::ptr_eq(space, state.space()) {
        return Err(Error::SpaceMismatch);
    }
    let mut diff = state.final_state().to_vec();
    axpy(-1.0, y_target_h, &mut diff);
    let mut rhs = solver.mass().mul_vec(&diff);
    rhs.iter_mut().for_each(|v| *v *= data.alpha_t);
    let terminal = solver.projection().solve_saddle(&rhs);

    let mut snapshots = vec![Vec::new(); nt + 1];
    let mut multipliers = vec![Vec::new(); nt + 1];
    snapshots[nt] = terminal.velocity;
    multipliers[nt] = terminal.multiplier;
    for n in (1..=nt).rev() {
        let tau = grid.tau(n);
        let yn = state.snapshot(n);
        let a = solver.adjoint_step_matrix(tau, yn);
        let mut rhs = solver.history_vector(tau, &snapshots[n]);
        if data.alpha_q != 0.0 {
            let target = load_time_average(space, data.y_q.as_ref(), grid.t(n - 1), grid.t(n));
            let my = solver.mass().mul_vec(yn);
            for ((r, m), t) in rhs.iter_mut().zip(&my).zip(&target) {
                *r += data.alpha_q * (m - t);
            }
        }
        let sol = SaddleSolver::new(space, &a)?.solve(&rhs);
        snapshots[n - 1] = sol.velocity;
        multipliers[n - 1] = sol.multiplier;
    }
    Ok(AdjointTrajectory {
        grid: grid.clone(),
        space: space.clone(),
        snapshots,
        multipliers,
    })
}

/// `∫_{t0}^{t1} ∫ |y − f(t)|² dx dt` for a fixed discrete `y`, with the
/// 2-point Gauss rule in time and the space's rule in space.
pub fn tracking_integral(space: &MixedSpace, y: &[f64], f: &dyn VectorField, t0: f64, t1: f64) -> f64 {
    let dim = space.dim();
    let times = gauss_interval(2, t0, t1);
    let mut ce = CellEval::default();
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut total = 0.0;
    for k in 0..space.mesh().n_cells() {
        space.eval_cell(k, space.rule(), &mut ce);
        velocity_at(space, k, y, &ce, &mut vals, &mut grads);
        for q in 0..ce.nq {
            for &(t, wt) in &times {
                let fv = f.value(&ce.points[q], t);
                let d2: f64 = (0..dim).map(|j| (vals[q][j] - fv[j]).powi(2)).sum();
                total += wt * ce.weights[q] * d2;
            }
        }
    }
    total
}

/// The three terms of `J_σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub terminal: f64,
    pub distributed: f64,
    pub control: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.terminal + self.distributed + self.control
    }
}

/// `J_σ(u) = (α_T/2)|y_N − y_T^h|² + (α_Q/2) Σ_n ∫_{I_n} |y_n − y_Q(t)|²
/// + (γ/2) Σ τ_n |K| |u_{n,K}|²`.
pub fn objective_parts(solver: &StateSolver, state: &StateTrajectory, y_target_h: &[f64], u: &[f64]) -> ObjectiveParts {
    let data = solver.data();
    let space = solver.space();
    let grid = state.grid();
    let mut diff = state.final_state().to_vec();
    axpy(-1.0, y_target_h, &mut diff);
    let terminal = 0.5 * data.alpha_t * solver.mass().bilinear(&diff, &diff);
    let mut distributed = 0.0;
    if data.alpha_q != 0.0 {
        for n in 1..=grid.n_steps() {
            distributed += tracking_integral(space, state.snapshot(n), data.y_q.as_ref(), grid.t(n - 1), grid.t(n));
        }
        distributed *= 0.5 * data.alpha_q;
    }
    let w = crate::control::control_weights(grid, space.mesh());
    let control = 0.5 * data.gamma * crate::control::inner(u, u, &w);
    ObjectiveParts {
        terminal,
        distributed,
        control,
    }
}

pub fn objective(solver: &StateSolver, state: &StateTrajectory, y_target_h: &[f64], u: &Control) -> f64 {
    objective_parts(solver, state, y_target_h, u.values()).total()
}

/// Riesz representative of `J′_σ(u)` in `U_σ`:
/// `g_{n,K,j} = (1/|K|) ∫_K λ_{n,j} + γ u_{n,K,j}`.
pub fn gradient(solver: &StateSolver, adjoint: &AdjointTrajectory, u: &[f64]) -> Vec<f64> {
    let space = solver.space();
    let gamma = solver.data().gamma;
    let grid = adjoint.grid();
    let mut g = Vec::with_capacity(u.len());
    for n in 1..=grid.n_steps() {
        g.extend(cell_averages(space, adjoint.snapshot(n)));
    }
    for (gi, ui) in g.iter_mut().zip(u) {
        *gi += gamma * ui;
    }
    g
}

/// Both sides of the discrete duality identity for a direction `v` with
/// linearized state `z`:
/// `(Σ_n α_Q ∫_{I_n} (y_n − y_Q, z_n) + α_T (y_N − y_T^h, z_N),
///   Σ_n τ_n (v_n, λ_n))`.
pub fn duality_pairing(
    solver: &StateSolver,
    state: &StateTrajectory,
    adjoint: &AdjointTrajectory,
    y_target_h: &[f64],
    v: &[f64],
    z: &StateTrajectory,
) -> (f64, f64) {
    let data = solver.data();
    let space = solver.space();
    let grid = state.grid();
    let nt = grid.n_steps();
    let mut diff = state.final_state().to_vec();
    axpy(-1.0, y_target_h, &mut diff);
    let mut tracking = data.alpha_t * solver.mass().bilinear(&diff, z.snapshot(nt));
    let mut control = 0.0;
    let len = space.mesh().n_cells() * space.dim();
    for n in 1..=nt {
        let tau = grid.tau(n);
        if data.alpha_q != 0.0 {
            let target = load_time_average(space, data.y_q.as_ref(), grid.t(n - 1), grid.t(n));
            let my = solver.mass().mul_vec(state.snapshot(n));
            let d: Vec<f64> = my.iter().zip(&target).map(|(m, t)| m - t).collect();
            tracking += data.alpha_q * tau * dot(&d, z.snapshot(n));
        }
        let vload = load_cellwise(space, &v[(n - 1) * len..n * len]);
        control += tau * dot(&vload, adjoint.snapshot(n));
    }
    (tracking, control)
}
