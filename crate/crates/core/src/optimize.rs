//! The reduced problem `min J_σ(u)` over `U_{σ,ad}` and its projected
//! gradient solver.

use std::sync::Arc;

use crate::adjoint::{discrete_target, gradient, objective_parts, solve_adjoint, AdjointTrajectory, ObjectiveParts};
use crate::control::{control_weights, inner, l2_norm, project_box, Control};
use crate::error::{Error, Result};
use crate::fem::assembly::trilinear;
use crate::fem::MixedSpace;
use crate::problem::{BoxBounds, ProblemData};
use crate::state::{Forcing, SolverOptions, StateSolver, StateTrajectory};
use crate::time::TimeGrid;

/// State and objective at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: StateTrajectory,
    pub parts: ObjectiveParts,
}

impl Evaluation {
    pub fn objective(&self) -> f64 {
        self.parts.total()
    }
}

/// `u ↦ J_σ(u)` on a fixed space and time grid.
pub struct ReducedProblem {
    solver: StateSolver,
    grid: TimeGrid,
    y_target_h: Vec<f64>,
    weights: Vec<f64>,
}

impl ReducedProblem {
    pub fn new(data: &ProblemData, space: &Arc<MixedSpace>, grid: &TimeGrid, opts: SolverOptions) -> Result<Self> {
        let solver = StateSolver::new(data, space, opts)?;
        let y_target_h = discrete_target(&solver)?;
        let weights = control_weights(grid, space.mesh());
        Ok(Self {
            solver,
            grid: grid.clone(),
            y_target_h,
            weights,
        })
    }

    pub fn solver(&self) -> &StateSolver {
        &self.solver
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn data(&self) -> &ProblemData {
        self.solver.data()
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        self.solver.space()
    }

    /// `y_T^h`.
    pub fn target(&self) -> &[f64] {
        &self.y_target_h
    }

    /// `τ_n |K|` per control entry.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn control_len(&self) -> usize {
        self.weights.len()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.control_len() {
            return Err(Error::invalid(format!(
                "control has {} values, expected {}",
                u.len(),
                self.control_len()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        self.check_len(u)?;
        let state = self.solver.solve(&self.grid, Forcing::Cellwise(u))?;
        let parts = objective_parts(&self.solver, &state, &self.y_target_h, u);
        Ok(Evaluation { state, parts })
    }

    pub fn objective(&self, u: &[f64]) -> Result<f64> {
        Ok(self.evaluate(u)?.objective())
    }

    pub fn adjoint(&self, eval: &Evaluation) -> Result<AdjointTrajectory> {
        solve_adjoint(&self.solver, &eval.state, &self.y_target_h)
    }

    /// Adjoint and the `U_σ`-Riesz gradient at `u`.
    pub fn gradient(&self, eval: &Evaluation, u: &[f64]) -> Result<(AdjointTrajectory, Vec<f64>)> {
        let adj = self.adjoint(eval)?;
        let g = gradient(&self.solver, &adj, u);
        Ok((adj, g))
    }

    /// `J″_σ(u)[v, v] = α_T |z_N|² + α_Q Σ τ_n |z_n|² + γ ‖v‖² − 2 Σ τ_n c(z_n, z_n, λ_n)`
    /// with `z = G′_σ(u) v`.
    pub fn hessian_quadratic(&self, state: &StateTrajectory, adjoint: &AdjointTrajectory, v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        let data = self.data();
        let z = self.solver.solve_linearized(state, Forcing::Cellwise(v))?;
        let m = self.solver.mass();
        let nt = self.grid.n_steps();
        let mut value = data.alpha_t * m.bilinear(z.snapshot(nt), z.snapshot(nt)) + data.gamma * inner(v, v, &self.weights);
        for n in 1..=nt {
            let tau = self.grid.tau(n);
            let zn = z.snapshot(n);
            if data.alpha_q != 0.0 {
                value += data.alpha_q * tau * m.bilinear(zn, zn);
            }
            value -= 2.0 * tau * trilinear(self.space(), zn, zn, adjoint.snapshot(n));
        }
        Ok(value)
    }

    /// `‖u − Proj(u − g)‖_{L²(Q)}`.
    pub fn stationarity(&self, u: &[f64], g: &[f64], bounds: &BoxBounds) -> f64 {
        let r = projected_residual(u, g, bounds);
        l2_norm(&r, &self.weights)
    }

    /// Post-hoc first-order audit at `u` with gradient `g`.
    pub fn kkt_audit(&self, u: &[f64], g: &[f64], bounds: &BoxBounds) -> KktAudit {
        let dim = bounds.dim();
        let mut audit = KktAudit {
            stationarity: self.stationarity(u, g, bounds),
            max_infeasibility: 0.0,
            max_interior_gradient: 0.0,
            min_gradient_at_lower: f64::INFINITY,
            max_gradient_at_upper: f64::NEG_INFINITY,
            n_interior: 0,
            n_lower: 0,
            n_upper: 0,
        };
        for (i, (&ui, &gi)) in u.iter().zip(g).enumerate() {
            let (lo, hi) = (bounds.lower()[i % dim], bounds.upper()[i % dim]);
            audit.max_infeasibility = audit.max_infeasibility.max(lo - ui).max(ui - hi);
            if ui == lo {
                audit.n_lower += 1;
                audit.min_gradient_at_lower = audit.min_gradient_at_lower.min(gi);
            } else if ui == hi {
                audit.n_upper += 1;
                audit.max_gradient_at_upper = audit.max_gradient_at_upper.max(gi);
            } else {
                audit.n_interior += 1;
                audit.max_interior_gradient = audit.max_interior_gradient.max(gi.abs());
            }
        }
        audit
    }
}

/// `u − Proj(u − g)`, entrywise.
pub fn projected_residual(u: &[f64], g: &[f64], bounds: &BoxBounds) -> Vec<f64> {
    let mut p: Vec<f64> = u.iter().zip(g).map(|(a, b)| a - b).collect();
    project_box(&mut p, bounds);
    u.iter().zip(&p).map(|(a, b)| a - b).collect()
}

/// First-order optimality audit. Entries exactly on a bound count as
/// active; everything else as interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktAudit {
    pub stationarity: f64,
    pub max_infeasibility: f64,
    /// `max |g|` over interior entries.
    pub max_interior_gradient: f64,
    /// `min g` over entries at a lower bound (`+∞` if none).
    pub min_gradient_at_lower: f64,
    /// `max g` over entries at an upper bound (`−∞` if none).
    pub max_gradient_at_upper: f64,
    pub n_interior: usize,
    pub n_lower: usize,
    pub n_upper: usize,
}

impl KktAudit {
    /// Stationarity, feasibility and the sign conditions at active bounds.
    pub fn holds(&self, tol: f64) -> bool {
        self.stationarity <= tol
            && self.max_infeasibility <= 0.0
            && self.min_gradient_at_lower >= -tol
            && self.max_gradient_at_upper <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// Stop when `‖u − Proj(u − g)‖_{L²(Q)} ≤ tol`.
    pub tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// First trial step; later steps use Barzilai-Borwein.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            initial_step: 1.0,
            min_step: 1e-6,
            max_step: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    /// No Armijo point within `max_backtracks`; usually rounding in `J`.
    LineSearchFailed,
}

/// History and final iterate of [`optimize`].
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub objective: Vec<f64>,
    pub stationarity: Vec<f64>,
    /// Accepted step length per iteration.
    pub steps: Vec<f64>,
    pub backtracks: Vec<usize>,
    pub termination: Termination,
    pub control: Control,
    pub gradient: Vec<f64>,
    pub state: StateTrajectory,
    pub adjoint: AdjointTrajectory,
    pub kkt: KktAudit,
}

impl OptimizeReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("at least one evaluation")
    }

    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with one row per iterate.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,objective,stationarity,step,backtracks\n");
        for (k, (j, st)) in self.objective.iter().zip(&self.stationarity).enumerate() {
            let (step, bt) = if k == 0 {
                (0.0, 0)
            } else {
                (self.steps[k - 1], self.backtracks[k - 1])
            };
            s.push_str(&format!("{k},{j:.16e},{st:.16e},{step:.16e},{bt}\n"));
        }
        s
    }
}

/// Projected gradient with Armijo backtracking on `J_σ` and
/// Barzilai-Borwein initial steps. `u0` is projected onto the box first.
pub fn optimize(problem: &ReducedProblem, u0: &Control, opts: &OptimizeOptions) -> Result<OptimizeReport> {
    let bounds = u0.bounds().clone();
    let w = problem.weights().to_vec();
    let mut u = u0.values().to_vec();
    problem.check_len(&u)?;
    project_box(&mut u, &bounds);
    let wrap = |iterate: usize| move |e: Error| Error::Optimizer {
        iterate,
        source: Box::new(e),
    };

    let mut eval = problem.evaluate(&u).map_err(wrap(0))?;
    let (mut adj, mut g) = problem.gradient(&eval, &u).map_err(wrap(0))?;
    let mut report_obj = vec![eval.objective()];
    let mut report_stat = vec![problem.stationarity(&u, &g, &bounds)];
    let (mut steps, mut backtracks) = (Vec::new(), Vec::new());
    let mut step = opts.initial_step.clamp(opts.min_step, opts.max_step);
    let mut termination = Termination::IterationCap;

    for k in 1..=opts.max_iterations {
        if *report_stat.last().unwrap() <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        let j0 = eval.objective();
        let mut s = step;
        let mut accepted = None;
        for bt in 0..=opts.max_backtracks {
            let mut trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            project_box(&mut trial, &bounds);
            let d: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let slope = inner(&g, &d, &w);
            let te = problem.evaluate(&trial).map_err(wrap(k))?;
            if te.objective() <= j0 + opts.armijo * slope {
                accepted = Some((trial, te, bt));
                break;
            }
            s *= opts.backtrack;
        }
        let Some((trial, te, bt)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };
        let (tadj, tg) = problem.gradient(&te, &trial).map_err(wrap(k))?;
        let ds: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = tg.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = inner(&ds, &dg, &w);
        step = if sy > 0.0 {
            (inner(&ds, &ds, &w) / sy).clamp(opts.min_step, opts.max_step)
        } else {
            opts.max_step
        };
        log::debug!("optimize: iterate {k} J = {:.6e} step {s:.3e} ({bt} backtracks)", te.objective());
        u = trial;
        eval = te;
        adj = tadj;
        g = tg;
        steps.push(s);
        backtracks.push(bt);
        report_obj.push(eval.objective());
        report_stat.push(problem.stationarity(&u, &g, &bounds));
    }
    if termination == Termination::IterationCap && *report_stat.last().unwrap() <= opts.tol {
        termination = Termination::Converged;
    }
    let kkt = problem.kkt_audit(&u, &g, &bounds);
    let control = Control::new(u0.grid().clone(), u0.mesh().clone(), bounds, u)?;
    Ok(OptimizeReport {
        objective: report_obj,
        stationarity: report_stat,
        steps,
        backtracks,
        termination,
        control,
        gradient: g,
        state: eval.state,
        adjoint: adj,
        kkt,
    })
}
