//! Space-time `H¹` error norms of piecewise-constant trajectories.

use crate::adjoint::AdjointTrajectory;
use crate::error::Result;
use crate::fem::assembly::velocity_error_sq;
use crate::fem::MixedSpace;
use crate::field::VectorField;
use crate::quadrature::{gauss_interval, SimplexRule};
use crate::state::StateTrajectory;
use crate::time::TimeGrid;

/// `max_n ‖y(t_n) − y_σ(t_n)‖_{H¹}`, `‖y − y_σ‖_{L²(0,T;H¹)}` and
/// `‖y − y_σ‖_{L∞(0,T;H¹)}` (sampled).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub nodal_max_h1: f64,
    pub l2_h1: f64,
    pub linf_h1: f64,
}

impl ErrorNorms {
    pub const NAMES: [&'static str; 3] = ["nodal_max_h1", "l2_h1", "linf_h1"];

    pub fn values(&self) -> [f64; 3] {
        [self.nodal_max_h1, self.l2_h1, self.linf_h1]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }
}

/// Quadrature used by the norms: a spatial rule and Gauss points per
/// interval.
#[derive(Debug, Clone)]
pub struct NormQuadrature {
    pub space_rule: SimplexRule,
    pub time_points: usize,
}

impl NormQuadrature {
    /// Degree-5 rule in space, 3 Gauss points in time.
    pub fn standard(dim: usize) -> Self {
        Self {
            space_rule: SimplexRule::degree5(dim),
            time_points: 3,
        }
    }
}

/// Full `H¹` norm of `y(·, t) − coeffs`.
pub fn h1_error(space: &MixedSpace, coeffs: &[f64], exact: &dyn VectorField, t: f64, rule: &SimplexRule) -> Result<f64> {
    let (l2, semi) = velocity_error_sq(space, coeffs, exact, t, rule)?;
    Ok((l2 + semi).sqrt())
}

/// Errors of a state trajectory: `y_σ = y_n` on `(t_{n−1}, t_n]`, nodes
/// `t_1, …, t_N`.
pub fn state_errors(exact: &dyn VectorField, traj: &StateTrajectory, quad: &NormQuadrature) -> Result<ErrorNorms> {
    let n = traj.grid().n_steps();
    let nodes: Vec<(f64, &[f64])> = (1..=n).map(|k| (traj.grid().t(k), traj.snapshot(k))).collect();
    piecewise_errors(traj.space(), traj.grid(), exact, |k| traj.snapshot(k), &nodes, quad)
}

/// Errors of an adjoint trajectory: `λ_σ = λ_n` inside `I_n` and
/// `λ_σ(t_n) = λ_{n+1}`, nodes `t_0, …, t_N`.
pub fn adjoint_errors(exact: &dyn VectorField, traj: &AdjointTrajectory, quad: &NormQuadrature) -> Result<ErrorNorms> {
    let n = traj.grid().n_steps();
    let nodes: Vec<(f64, &[f64])> = (0..=n).map(|k| (traj.grid().t(k), traj.snapshot(k + 1))).collect();
    piecewise_errors(traj.space(), traj.grid(), exact, |k| traj.snapshot(k), &nodes, quad)
}

fn piecewise_errors<'a>(
    space: &MixedSpace,
    grid: &TimeGrid,
    exact: &dyn VectorField,
    interval: impl Fn(usize) -> &'a [f64],
    nodes: &[(f64, &[f64])],
    quad: &NormQuadrature,
) -> Result<ErrorNorms> {
    let rule = &quad.space_rule;
    let mut nodal_max_h1: f64 = 0.0;
    for &(t, c) in nodes {
        nodal_max_h1 = nodal_max_h1.max(h1_error(space, c, exact, t, rule)?);
    }
    let mut linf_h1 = nodal_max_h1;
    let mut l2sq = 0.0;
    for n in 1..=grid.n_steps() {
        let c = interval(n);
        for (t, w) in gauss_interval(quad.time_points, grid.t(n - 1), grid.t(n)) {
            let e = h1_error(space, c, exact, t, rule)?;
            l2sq += w * e * e;
            linf_h1 = linf_h1.max(e);
        }
    }
    Ok(ErrorNorms {
        nodal_max_h1,
        l2_h1: l2sq.sqrt(),
        linf_h1,
    })
}
