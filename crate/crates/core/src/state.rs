//! The discrete state equation: a dG(0) (backward-Euler-type) march where
//! every step solves
//!
//! ```text
//! ((y_n − y_{n−1})/τ_n, w) + ν a(y_n, w) + α² a((y_n − y_{n−1})/τ_n, w)
//!     + c(y_n, y_n, w) = (u_n, w)      for all w in V_h,
//! ```
//!
//! in saddle form with Newton's method and a Picard fallback, plus the
//! linearized equation `z_σ = G′_σ(u) v`.

use std::sync::Arc;

use crate::control::Control;
use crate::error::{Error, Result};
use crate::fem::assembly::{
    assemble_mass, assemble_stiffness, convection, load_cellwise, load_time_average,
};
use crate::fem::{ConvectionMode, FeFunction, MixedSpace};
use crate::field::VectorField;
use crate::problem::ProblemData;
use crate::projections::ProjectionContext;
use crate::saddle::SaddleSolver;
use crate::sparse::{norm2, SparseOperator};
use crate::time::TimeGrid;

/// Nonlinear solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_newton: usize,
    pub atol: f64,
    pub rtol: f64,
    /// Failed Newton steps (no residual decrease, or singular Jacobian)
    /// tolerated before switching to Picard iteration.
    pub picard_after: usize,
    pub max_picard: usize,
    /// Use Picard iteration from the start.
    pub force_picard: bool,
    /// Also stop when the update is below `step_tol * (1 + |y|)` (max norm),
    /// i.e. the iteration has reached rounding level.
    pub step_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_newton: 25,
            atol: 1e-10,
            rtol: 1e-9,
            picard_after: 2,
            max_picard: 100,
            force_picard: false,
            step_tol: 1e-14,
        }
    }
}

impl SolverOptions {
    /// Tolerances at rounding level, for finite-difference comparisons.
    pub fn tight() -> Self {
        Self {
            atol: 1e-15,
            rtol: 1e-15,
            ..Self::default()
        }
    }
}

/// Right-hand side `u` of the state equation.
#[derive(Clone, Copy)]
pub enum Forcing<'a> {
    Zero,
    /// Piecewise-constant values in the [`Control`] layout (any sign, no box).
    Cellwise(&'a [f64]),
    /// Space-time callback, averaged per interval with 2-point Gauss.
    Field(&'a dyn VectorField),
}

impl<'a> From<&'a Control> for Forcing<'a> {
    fn from(u: &'a Control) -> Self {
        Forcing::Cellwise(u.values())
    }
}

impl Forcing<'_> {
    /// `(u_n, φ_i) = (1/τ_n) ∫_{I_n} (u(t), φ_i) dt`.
    pub fn load(&self, space: &MixedSpace, grid: &TimeGrid, n: usize) -> Vec<f64> {
        match self {
            Forcing::Zero => vec![0.0; space.n_vel()],
            Forcing::Cellwise(v) => {
                let len = space.mesh().n_cells() * space.dim();
                load_cellwise(space, &v[(n - 1) * len..n * len])
            }
            Forcing::Field(f) => load_time_average(space, *f, grid.t(n - 1), grid.t(n)),
        }
    }
}

/// Iteration record of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub newton_iterations: usize,
    pub picard_iterations: usize,
    /// Residual norm before the first and after every iteration.
    pub residuals: Vec<f64>,
}

/// Piecewise-constant-in-time velocity trajectory `y_0, …, y_N`.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    grid: TimeGrid,
    space: Arc<MixedSpace>,
    snapshots: Vec<Vec<f64>>,
    multipliers: Vec<Vec<f64>>,
    reports: Vec<StepReport>,
}

impl StateTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    /// `y_{n,h}`, `0 ≤ n ≤ N`.
    pub fn snapshot(&self, n: usize) -> &[f64] {
        &self.snapshots[n]
    }

    pub fn snapshots(&self) -> &[Vec<f64>] {
        &self.snapshots
    }

    /// Divergence multiplier of step `n ≥ 1`; the discrete pressure is its
    /// negative.
    pub fn multiplier(&self, n: usize) -> &[f64] {
        &self.multipliers[n - 1]
    }

    /// Discrete pressure of step `n ≥ 1`.
    pub fn pressure(&self, n: usize) -> Vec<f64> {
        self.multipliers[n - 1].iter().map(|q| -q).collect()
    }

    pub fn function(&self, n: usize) -> FeFunction {
        let f = FeFunction::from_velocity(&self.space, self.snapshots[n].clone()).expect("length");
        if n == 0 {
            f
        } else {
            f.with_pressure(self.pressure(n)).expect("length")
        }
    }

    /// `y_σ(t)`: `y_n` on `(t_{n−1}, t_n]`, `y_0` at `t = 0`.
    pub fn at(&self, t: f64) -> &[f64] {
        &self.snapshots[self.grid.interval_of(t)]
    }

    pub fn reports(&self) -> &[StepReport] {
        &self.reports
    }

    pub fn final_state(&self) -> &[f64] {
        &self.snapshots[self.grid.n_steps()]
    }
}

/// One Newton update.
#[derive(Debug, Clone)]
pub struct NewtonUpdate {
    pub velocity: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// Max-norm of the velocity correction.
    pub correction: f64,
}

/// State solver bound to one space and data set; caches the mass and
/// stiffness operators and the `P_h` factorization.
pub struct StateSolver {
    space: Arc<MixedSpace>,
    data: ProblemData,
    mass: SparseOperator,
    stiffness: SparseOperator,
    projection: ProjectionContext,
    opts: SolverOptions,
}

impl StateSolver {
    pub fn new(data: &ProblemData, space: &Arc<MixedSpace>, opts: SolverOptions) -> Result<Self> {
        data.validate_physics()?;
        Ok(Self {
            space: space.clone(),
            data: data.clone(),
            mass: assemble_mass(space),
            stiffness: assemble_stiffness(space),
            projection: ProjectionContext::new(space, data.alpha)?,
            opts,
        })
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseOperator {
        &self.stiffness
    }

    pub fn projection(&self) -> &ProjectionContext {
        &self.projection
    }

    /// `y_{0,h} = P_h y_0`.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        Ok(self.projection.project_ph(self.data.y0.as_ref(), 0.0)?.velocity)
    }

    /// Voigt energy `|y|² + α² |∇y|²`.
    pub fn energy(&self, y: &[f64]) -> f64 {
        let a2 = self.data.alpha * self.data.alpha;
        self.mass.bilinear(y, y) + a2 * self.stiffness.bilinear(y, y)
    }

    /// `S = M/τ + (ν + α²/τ) K`.
    fn step_operator(&self, tau: f64) -> SparseOperator {
        let mut s = self.mass.scaled(1.0 / tau);
        s.axpy(self.data.nu + self.data.alpha * self.data.alpha / tau, &self.stiffness);
        s
    }

    /// `G y = (M y + α² K y) / τ`.
    fn history(&self, tau: f64, y: &[f64]) -> Vec<f64> {
        let mut g = self.mass.mul_vec(y);
        self.stiffness.mul_vec_add(self.data.alpha * self.data.alpha, y, &mut g);
        g.iter_mut().for_each(|v| *v /= tau);
        g
    }

    /// Step residual `S y − G y_prev + N(y) y − f + Bᵀ q` on free dofs,
    /// given `base = G y_prev + f` and the Jacobian `L(y)`.
    fn residual(&self, s: &SparseOperator, jac: &SparseOperator, base: &[f64], y: &[f64], q: &[f64]) -> Vec<f64> {
        let mut r = s.mul_vec(y);
        jac.mul_vec_add(0.5, y, &mut r);
        for (ri, bi) in r.iter_mut().zip(base) {
            *ri -= bi;
        }
        self.space.saddle_layout().div().mul_transpose_vec_add(1.0, q, &mut r);
        self.space.apply_dirichlet(&mut r);
        r
    }

    /// One Newton update of the step system at `guess`; `rhs` is the load
    /// `(u_n, φ)`.
    pub fn newton_step_state(&self, tau: f64, y_prev: &[f64], rhs: &[f64], guess: &[f64]) -> Result<NewtonUpdate> {
        let s = self.step_operator(tau);
        let mut base = self.history(tau, y_prev);
        crate::sparse::axpy(1.0, rhs, &mut base);
        let jac = convection(&self.space, guess, ConvectionMode::StateJacobian);
        self.newton_solve(&s, &jac, &base, guess)
    }

    fn newton_solve(&self, s: &SparseOperator, jac: &SparseOperator, base: &[f64], y: &[f64]) -> Result<NewtonUpdate> {
        // J y_new + Bᵀ q = J y − R0(y) = base + ½ L(y) y
        let mut a = s.clone();
        a.axpy(1.0, jac);
        let mut rhs = base.to_vec();
        jac.mul_vec_add(0.5, y, &mut rhs);
        let sol = SaddleSolver::new(&self.space, &a)?.solve(&rhs);
        let correction = sol.velocity.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(NewtonUpdate {
            velocity: sol.velocity,
            multiplier: sol.multiplier,
            correction,
        })
    }

    fn picard_solve(&self, s: &SparseOperator, base: &[f64], y: &[f64]) -> Result<NewtonUpdate> {
        let mut a = s.clone();
        a.axpy(1.0, &convection(&self.space, y, ConvectionMode::State));
        let sol = SaddleSolver::new(&self.space, &a)?.solve(base);
        let correction = sol.velocity.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(NewtonUpdate {
            velocity: sol.velocity,
            multiplier: sol.multiplier,
            correction,
        })
    }

    /// Solves step `step` (for error reports) with load `f`, starting from
    /// `y_prev` and multiplier guess `q0`.
    pub fn solve_step(
        &self,
        step: usize,
        tau: f64,
        y_prev: &[f64],
        f: &[f64],
        q0: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, StepReport)> {
        let opts = &self.opts;
        let s = self.step_operator(tau);
        let mut base = self.history(tau, y_prev);
        crate::sparse::axpy(1.0, f, &mut base);

        let mut y = y_prev.to_vec();
        let mut q = q0.to_vec();
        let mut jac = convection(&self.space, &y, ConvectionMode::StateJacobian);
        let r0 = norm2(&self.residual(&s, &jac, &base, &y, &q));
        let tol = opts.atol + opts.rtol * r0;
        let mut report = StepReport {
            step,
            newton_iterations: 0,
            picard_iterations: 0,
            residuals: vec![r0],
        };
        let mut r = r0;
        let mut picard = opts.force_picard;
        let mut failures = 0;
        let mut best = (r0, y.clone(), q.clone());
        let mut stagnated = false;
        while r > tol {
            let update = if picard {
                if report.picard_iterations == opts.max_picard {
                    break;
                }
                report.picard_iterations += 1;
                self.picard_solve(&s, &base, &y)
            } else {
                if report.newton_iterations == opts.max_newton {
                    break;
                }
                report.newton_iterations += 1;
                self.newton_solve(&s, &jac, &base, &y)
            };
            let update = match update {
                Ok(u) => u,
                Err(Error::SingularMatrix { .. }) if !picard => {
                    failures += 1;
                    if failures >= opts.picard_after {
                        picard = true;
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let scale = update.velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            y = update.velocity;
            q = update.multiplier;
            jac = convection(&self.space, &y, ConvectionMode::StateJacobian);
            let r_new = norm2(&self.residual(&s, &jac, &base, &y, &q));
            report.residuals.push(r_new);
            if !r_new.is_finite() {
                return Err(self.nonconvergence(report));
            }
            if r_new < best.0 {
                best = (r_new, y.clone(), q.clone());
            }
            if !picard && r_new >= r {
                failures += 1;
                if failures >= opts.picard_after {
                    log::debug!("step {step}: switching to Picard after {failures} failed Newton steps");
                    picard = true;
                    (r, y, q) = best.clone();
                    continue;
                }
            }
            r = r_new;
            if update.correction <= opts.step_tol * (1.0 + scale) {
                stagnated = true;
                break;
            }
        }
        if r > tol && !stagnated {
            return Err(self.nonconvergence(report));
        }
        log::debug!(
            "step {step}: newton {} picard {} residuals {:?}",
            report.newton_iterations,
            report.picard_iterations,
            report.residuals
        );
        Ok((y, q, report))
    }

    fn nonconvergence(&self, report: StepReport) -> Error {
        Error::NonConvergence {
            step: report.step,
            iterations: report.newton_iterations + report.picard_iterations,
            residuals: report.residuals,
        }
    }

    /// The full march `y_0 = P_h y_0`, then steps `1..=N`.
    pub fn solve(&self, grid: &TimeGrid, forcing: Forcing<'_>) -> Result<StateTrajectory> {
        let mut snapshots = vec![self.initial_state()?];
        let mut multipliers: Vec<Vec<f64>> = Vec::with_capacity(grid.n_steps());
        let mut reports = Vec::with_capacity(grid.n_steps());
        let mut q = vec![0.0; self.space.n_pre()];
        for n in 1..=grid.n_steps() {
            let f = forcing.load(&self.space, grid, n);
            let (y, qn, report) = self.solve_step(n, grid.tau(n), &snapshots[n - 1], &f, &q)?;
            q = qn.clone();
            snapshots.push(y);
            multipliers.push(qn);
            reports.push(report);
        }
        Ok(StateTrajectory {
            grid: grid.clone(),
            space: self.space.clone(),
            snapshots,
            multipliers,
            reports,
        })
    }

    /// `z_σ = G′_σ(u) v` about the state `base`: `z_0 = 0` and
    /// `((z_n − z_{n−1})/τ_n, w) + ν a(z_n, w) + α² a((z_n − z_{n−1})/τ_n, w)
    /// + c(z_n, y_n, w) + c(y_n, z_n, w) = (v_n, w)`.
    pub fn solve_linearized(&self, base: &StateTrajectory, v: Forcing<'_>) -> Result<StateTrajectory> {
        let grid = base.grid();
        let mut snapshots = vec![vec![0.0; self.space.n_vel()]];
        let mut multipliers = Vec::with_capacity(grid.n_steps());
        for n in 1..=grid.n_steps() {
            let tau = grid.tau(n);
            let mut a = self.step_operator(tau);
            a.axpy(1.0, &convection(&self.space, base.snapshot(n), ConvectionMode::StateJacobian));
            let mut rhs = self.history(tau, &snapshots[n - 1]);
            crate::sparse::axpy(1.0, &v.load(&self.space, grid, n), &mut rhs);
            let sol = SaddleSolver::new(&self.space, &a)?.solve(&rhs);
            snapshots.push(sol.velocity);
            multipliers.push(sol.multiplier);
        }
        Ok(StateTrajectory {
            grid: grid.clone(),
            space: self.space.clone(),
            snapshots,
            multipliers,
            reports: Vec::new(),
        })
    }

    /// Step matrix `S + L(y)` of the linearized equation (velocity block).
    pub fn linearized_step_matrix(&self, tau: f64, y: &[f64]) -> SparseOperator {
        let mut a = self.step_operator(tau);
        a.axpy(1.0, &convection(&self.space, y, ConvectionMode::StateJacobian));
        a
    }

    /// Step matrix `S + L(y)ᵀ` of the adjoint equation (velocity block).
    pub fn adjoint_step_matrix(&self, tau: f64, y: &[f64]) -> SparseOperator {
        let mut a = self.step_operator(tau);
        a.axpy(1.0, &convection(&self.space, y, ConvectionMode::Adjoint));
        a
    }

    pub(crate) fn history_vector(&self, tau: f64, y: &[f64]) -> Vec<f64> {
        self.history(tau, y)
    }
}

/// Convenience wrapper: builds a [`StateSolver`] and marches.
pub fn solve_state(
    data: &ProblemData,
    space: &Arc<MixedSpace>,
    grid: &TimeGrid,
    forcing: Forcing<'_>,
    opts: SolverOptions,
) -> Result<StateTrajectory> {
    StateSolver::new(data, space, opts)?.solve(grid, forcing)
}

/// Convenience wrapper around [`StateSolver::solve_linearized`].
pub fn solve_linearized_state(
    data: &ProblemData,
    space: &Arc<MixedSpace>,
    base: &StateTrajectory,
    v: Forcing<'_>,
    opts: SolverOptions,
) -> Result<StateTrajectory> {
    StateSolver::new(data, space, opts)?.solve_linearized(base, v)
}
