//! The elliptic projection `P_h`, the pressure projection `R_h`, and their
//! time-sampled versions.
//!
//! Both projections solve the same saddle system with the `a_α` velocity
//! block, so one factorization serves every right-hand side.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::assembly::{a_alpha_load, assemble_a_alpha, div_load};
use crate::fem::{FeFunction, MixedSpace};
use crate::field::{ScalarField, VectorField};
use crate::saddle::{SaddleSolution, SaddleSolver};
use crate::sparse::SparseOperator;
use crate::time::TimeGrid;

/// Which grid node a time-sampled projection uses on interval `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    /// `P_h y(t_n)`.
    Right,
    /// `P_h y(t_{n−1})`.
    Left,
}

pub struct ProjectionContext {
    space: Arc<MixedSpace>,
    alpha: f64,
    a_alpha: SparseOperator,
    solver: SaddleSolver,
}

impl ProjectionContext {
    pub fn new(space: &Arc<MixedSpace>, alpha: f64) -> Result<Self> {
        let a_alpha = assemble_a_alpha(space, alpha)?;
        let solver = SaddleSolver::new(space, &a_alpha)?;
        Ok(Self {
            space: space.clone(),
            alpha,
            a_alpha,
            solver,
        })
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The assembled `a_α` operator (without boundary conditions).
    pub fn a_alpha(&self) -> &SparseOperator {
        &self.a_alpha
    }

    /// `P_h y`: `a_α(y_h, v_h) = a_α(y, v_h)` for all discretely
    /// divergence-free `v_h`. The field must provide gradients.
    pub fn project_ph(&self, y: &dyn VectorField, t: f64) -> Result<FeFunction> {
        let rhs = a_alpha_load(&self.space, y, t, self.alpha)?;
        Ok(self.solve_velocity(&rhs))
    }

    /// `P_h` of a discrete velocity (boundary values are dropped).
    pub fn project_coeffs(&self, y: &[f64]) -> FeFunction {
        self.solve_velocity(&self.a_alpha.mul_vec(y))
    }

    /// Solves the `a_α` saddle system for a given velocity load.
    pub fn solve_velocity(&self, rhs: &[f64]) -> FeFunction {
        let s = self.solver.solve(rhs);
        FeFunction::from_velocity(&self.space, s.velocity).expect("length matches space")
    }

    /// The `a_α` saddle solve, velocity and multiplier.
    pub fn solve_saddle(&self, rhs: &[f64]) -> SaddleSolution {
        self.solver.solve(rhs)
    }

    /// `R_h p` for the scalar `p(·, t)`, returned as the pressure component of
    /// a function with zero velocity. A nonzero mean of `p` is removed.
    pub fn project_rh(&self, p: &dyn ScalarField, t: f64) -> FeFunction {
        let rhs = div_load(&self.space, p, t);
        let s = self.solver.solve(&rhs);
        let mean = mean_of(&self.space, p, t);
        if mean.abs() > 0.0 {
            log::debug!("R_h: removed pressure mean {mean:.3e}");
        }
        FeFunction::zero(&self.space)
            .with_pressure(s.multiplier)
            .expect("length matches space")
    }

    /// Snapshots `P_h y(t_n)` (right) or `P_h y(t_{n−1})` (left), one per
    /// interval `n = 1..=N`.
    pub fn project_time(
        &self,
        y: &dyn VectorField,
        grid: &TimeGrid,
        endpoint: Endpoint,
    ) -> Result<Vec<FeFunction>> {
        (1..=grid.n_steps())
            .map(|n| {
                let t = match endpoint {
                    Endpoint::Right => grid.t(n),
                    Endpoint::Left => grid.t(n - 1),
                };
                self.project_ph(y, t)
            })
            .collect()
    }
}

fn mean_of(space: &MixedSpace, p: &dyn ScalarField, t: f64) -> f64 {
    let mut ce = crate::fem::CellEval::default();
    let mut total = 0.0;
    for k in 0..space.mesh().n_cells() {
        space.eval_cell(k, space.rule(), &mut ce);
        for q in 0..ce.nq {
            total += ce.weights[q] * p.value(&ce.points[q], t);
        }
    }
    total / space.mesh().volume()
}
