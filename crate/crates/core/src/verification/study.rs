//! Refinement studies and log-log rate tables.

use std::fmt;
use std::sync::Arc;

use crate::adjoint::{discrete_target, solve_adjoint};
use crate::control::{control_weights, Control};
use crate::error::{Error, Result};
use crate::fem::MixedSpace;
use crate::mesh::{BoxDomain, Mesh};
use crate::optimize::{optimize, KktAudit, OptimizeOptions, ReducedProblem};
use crate::problem::{BoxBounds, ProblemData};
use crate::state::{Forcing, SolverOptions, StateSolver};
use crate::time::TimeGrid;

use super::cases::{build_case, ManufacturedCase};
use super::norms::{adjoint_errors, state_errors, ErrorNorms, NormQuadrature};

/// How `τ` follows `h` across levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `τ ∝ h²`: steps ×4 per level.
    TauH2,
    /// `τ ∝ h`: steps ×2 per level.
    TauH,
    /// Mesh fixed at the finest level, steps ×2 per level.
    TauOnly,
}

impl Coupling {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tau-h2" => Ok(Self::TauH2),
            "tau-h" => Ok(Self::TauH),
            "tau-only" => Ok(Self::TauOnly),
            _ => Err(Error::Config(format!("unknown coupling `{s}` (tau-h2, tau-h, tau-only)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    State,
    Adjoint,
    /// Self-convergence of the optimal control against a reference level.
    Control,
}

impl StudyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Self::State),
            "adjoint" => Ok(Self::Adjoint),
            "control" => Ok(Self::Control),
            _ => Err(Error::Config(format!("unknown study kind `{s}` (state, adjoint, control)"))),
        }
    }
}

/// Independent variable of the fitted slopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateParameter {
    H,
    Tau,
}

/// Box-constrained tracking problem of a control study: the case velocity
/// is the target, the initial state is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSetup {
    pub gamma: f64,
    pub bound: f64,
    pub optimizer: OptimizeOptions,
}

impl Default for ControlSetup {
    fn default() -> Self {
        Self {
            gamma: 1e-2,
            bound: 1.0,
            optimizer: OptimizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub case: ManufacturedCase,
    pub kind: StudyKind,
    pub coupling: Coupling,
    /// Number of levels (at least 3); control studies add one reference
    /// level on top.
    pub levels: usize,
    /// Subdivisions per axis of the coarsest mesh.
    pub base_n: usize,
    /// Time steps on the coarsest level.
    pub base_steps: usize,
    pub solver: SolverOptions,
    pub control: ControlSetup,
}

impl StudyConfig {
    pub fn new(case: &str, kind: StudyKind, coupling: Coupling, levels: usize) -> Result<Self> {
        Ok(Self {
            case: build_case(case)?,
            kind,
            coupling,
            levels,
            base_n: 2,
            base_steps: 2,
            solver: SolverOptions::default(),
            control: ControlSetup::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(Error::Config(format!("a study needs at least 3 levels, got {}", self.levels)));
        }
        if self.base_n == 0 || self.base_steps == 0 {
            return Err(Error::Config("base_n and base_steps must be positive".into()));
        }
        if self.kind == StudyKind::Control && self.coupling != Coupling::TauH2 {
            return Err(Error::Config("control studies use the tau-h2 coupling".into()));
        }
        Ok(())
    }

    /// `(mesh refinements, steps)` of level `l`.
    pub fn level_size(&self, l: usize) -> (usize, usize) {
        match self.coupling {
            Coupling::TauH2 => (l, self.base_steps * 4usize.pow(l as u32)),
            Coupling::TauH => (l, self.base_steps * 2usize.pow(l as u32)),
            Coupling::TauOnly => (self.levels - 1, self.base_steps * 2usize.pow(l as u32)),
        }
    }

    /// Norms checked by the study and their minimal slopes: first order in
    /// `h`, half order in `τ`.
    pub fn thresholds(&self) -> Vec<(&'static str, f64)> {
        match (self.kind, self.coupling) {
            (StudyKind::Control, _) => vec![("control_l2", 0.45)],
            (_, Coupling::TauOnly) => vec![("linf_h1", 0.45)],
            _ => vec![("nodal_max_h1", 0.9), ("l2_h1", 0.9)],
        }
    }

    pub fn parameter(&self) -> RateParameter {
        match (self.kind, self.coupling) {
            (StudyKind::Control, _) | (_, Coupling::TauOnly) => RateParameter::Tau,
            _ => RateParameter::H,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub errors: Vec<f64>,
    /// Optimizer iterations (control studies).
    pub iterations: Option<usize>,
    /// Optimality audit at termination (control studies).
    pub kkt: Option<KktAudit>,
}

/// Fitted slope of one norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub value: f64,
    /// Slope without the coarsest level (`None` with fewer than 4 levels).
    pub without_coarsest: Option<f64>,
}

impl Slope {
    /// Dropping the coarsest level moves the slope by less than 0.15.
    pub fn is_stable(&self) -> bool {
        self.without_coarsest.is_none_or(|s| (s - self.value).abs() < 0.15)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub norms: Vec<String>,
    pub parameter: RateParameter,
    pub rows: Vec<RateRow>,
    /// Optimality audit of the reference solve (control studies).
    pub reference_kkt: Option<KktAudit>,
}

impl RateTable {
    pub fn new(norms: &[&str], parameter: RateParameter) -> Self {
        Self {
            norms: norms.iter().map(|s| s.to_string()).collect(),
            parameter,
            rows: Vec::new(),
            reference_kkt: None,
        }
    }

    fn xs(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match self.parameter {
                RateParameter::H => r.h,
                RateParameter::Tau => r.tau,
            })
            .collect()
    }

    fn column(&self, norm: &str) -> Option<Vec<f64>> {
        let i = self.norms.iter().position(|n| n == norm)?;
        Some(self.rows.iter().map(|r| r.errors[i]).collect())
    }

    /// Least-squares slope of `log e` against `log h` or `log τ`.
    pub fn slope(&self, norm: &str) -> Option<Slope> {
        let e = self.column(norm)?;
        let x = self.xs();
        if x.len() < 3 {
            return None;
        }
        let without_coarsest = (x.len() >= 4).then(|| loglog_slope(&x[1..], &e[1..]));
        Some(Slope {
            value: loglog_slope(&x, &e),
            without_coarsest,
        })
    }

    /// Observed orders between consecutive levels.
    pub fn pairwise_rates(&self, norm: &str) -> Vec<f64> {
        let (Some(e), x) = (self.column(norm), self.xs()) else {
            return Vec::new();
        };
        (1..e.len())
            .map(|i| (e[i - 1] / e[i]).ln() / (x[i - 1] / x[i]).ln())
            .collect()
    }

    /// `level,h,tau,<norm>...` then one row per level with `<norm>=<value>`
    /// cells, then `slope` rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!("level,h,tau,{}\n", self.norms.join(","));
        for r in &self.rows {
            s.push_str(&format!("{},{:.16e},{:.16e}", r.level, r.h, r.tau));
            for (n, e) in self.norms.iter().zip(&r.errors) {
                s.push_str(&format!(",{n}={e:.16e}"));
            }
            s.push('\n');
        }
        let param = match self.parameter {
            RateParameter::H => "h",
            RateParameter::Tau => "tau",
        };
        if self.rows.len() >= 3 {
            s.push_str(&format!("slope,{param},"));
            for n in &self.norms {
                let v = self.slope(n).map_or(f64::NAN, |sl| sl.value);
                s.push_str(&format!(",{n}={v:.6}"));
            }
            s.push('\n');
        }
        s
    }

    /// One `norm=<name> slope=<value> threshold=<value> PASS|FAIL` line per
    /// threshold, followed by a note for slopes that are not stable.
    pub fn summary(&self, thresholds: &[(&str, f64)]) -> Vec<String> {
        let mut lines = Vec::new();
        for &(norm, thr) in thresholds {
            let Some(sl) = self.slope(norm) else {
                lines.push(format!("norm={norm} slope=NaN threshold={thr:.2} FAIL"));
                continue;
            };
            let verdict = if sl.value >= thr { "PASS" } else { "FAIL" };
            lines.push(format!("norm={norm} slope={:.3} threshold={thr:.2} {verdict}", sl.value));
            if !sl.is_stable() {
                lines.push(format!(
                    "note: norm={norm} inconclusive, slope without coarsest level is {:.3}",
                    sl.without_coarsest.unwrap_or(f64::NAN)
                ));
            }
        }
        lines
    }

    pub fn passes(&self, thresholds: &[(&str, f64)]) -> bool {
        thresholds
            .iter()
            .all(|&(n, t)| self.slope(n).is_some_and(|s| s.value >= t))
    }
}

/// Least-squares slope of `log e` against `log x`.
pub fn loglog_slope(x: &[f64], e: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let me = le.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&le).map(|(a, b)| (a - mx) * (b - me)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// A study that stopped at `level`; `table` holds the completed levels.
#[derive(Debug)]
pub struct StudyFailure {
    pub table: RateTable,
    pub level: usize,
    pub source: Error,
}

impl fmt::Display for StudyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "study failed at level {}: {}", self.level, self.source)
    }
}

impl std::error::Error for StudyFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Mesh hierarchy by uniform refinement of the structured unit box, with
/// child-to-parent cell maps (`parents[l]` maps level `l` cells to level
/// `l − 1`).
pub struct Hierarchy {
    pub meshes: Vec<Arc<Mesh>>,
    pub parents: Vec<Vec<usize>>,
}

impl Hierarchy {
    pub fn new(dim: usize, base_n: usize, levels: usize) -> Result<Self> {
        let mut meshes = vec![Arc::new(Mesh::build_structured(&BoxDomain::unit(dim), base_n)?)];
        let mut parents = vec![Vec::new()];
        for _ in 1..levels {
            let (m, p) = meshes.last().unwrap().refine_with_parents();
            meshes.push(Arc::new(m));
            parents.push(p);
        }
        Ok(Self { meshes, parents })
    }

    /// Level-`coarse` ancestor of every level-`fine` cell.
    pub fn ancestors(&self, fine: usize, coarse: usize) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.meshes[fine].n_cells()).collect();
        for l in (coarse + 1..=fine).rev() {
            for k in map.iter_mut() {
                *k = self.parents[l][*k];
            }
        }
        map
    }
}

/// Prolongs a control on (`grid_c`, level `coarse`) to (`grid_f`, level
/// `fine`); the time grids must be uniform and nested.
pub fn prolong_control(values: &[f64], dim: usize, ancestors: &[usize], n_coarse_cells: usize, ratio: usize, steps_fine: usize) -> Vec<f64> {
    let nf = ancestors.len();
    let mut out = Vec::with_capacity(steps_fine * nf * dim);
    for m in 0..steps_fine {
        let n = m / ratio;
        for &a in ancestors {
            for j in 0..dim {
                out.push(values[(n * n_coarse_cells + a) * dim + j]);
            }
        }
    }
    out
}

/// Runs the study level by level.
pub fn run_convergence(cfg: &StudyConfig) -> std::result::Result<RateTable, StudyFailure> {
    let norms: Vec<&str> = match cfg.kind {
        StudyKind::Control => vec!["control_l2", "objective_gap"],
        _ => ErrorNorms::NAMES.to_vec(),
    };
    let mut table = RateTable::new(&norms, cfg.parameter());
    let fail = |table: RateTable, level: usize, source: Error| StudyFailure { table, level, source };
    if let Err(e) = cfg.validate() {
        return Err(fail(table, 0, e));
    }
    let extra = usize::from(cfg.kind == StudyKind::Control);
    let depth = match cfg.coupling {
        Coupling::TauOnly => cfg.levels,
        _ => cfg.levels + extra,
    };
    let hier = match Hierarchy::new(cfg.case.dim(), cfg.base_n, depth) {
        Ok(h) => h,
        Err(e) => return Err(fail(table, 0, e)),
    };
    if cfg.kind == StudyKind::Control {
        return control_study(cfg, &hier, table);
    }
    let quad = NormQuadrature::standard(cfg.case.dim());
    for l in 0..cfg.levels {
        let (refine, steps) = cfg.level_size(l);
        let mesh = &hier.meshes[refine];
        match level_errors(cfg, mesh, steps, &quad) {
            Ok(e) => {
                log::info!("level {l}: h = {:.4e}, steps = {steps}, errors = {:?}", mesh.h(), e.values());
                table.rows.push(RateRow {
                    level: l,
                    h: mesh.h(),
                    tau: cfg.case.t_end() / steps as f64,
                    errors: e.values().to_vec(),
                    iterations: None,
                    kkt: None,
                });
            }
            Err(e) => return Err(fail(table, l, e)),
        }
    }
    Ok(table)
}

/// State (or adjoint) errors of the case on one mesh with `steps` uniform
/// steps.
pub fn level_errors(cfg: &StudyConfig, mesh: &Arc<Mesh>, steps: usize, quad: &NormQuadrature) -> Result<ErrorNorms> {
    let case = &cfg.case;
    let space = MixedSpace::new(mesh.clone());
    let grid = TimeGrid::uniform(case.t_end(), steps)?;
    let forcing = case.forcing();
    match cfg.kind {
        StudyKind::State => {
            let solver = StateSolver::new(&case.state_data(), &space, cfg.solver.clone())?;
            let state = solver.solve(&grid, Forcing::Field(forcing.as_ref()))?;
            state_errors(case.velocity().as_ref(), &state, quad)
        }
        StudyKind::Adjoint => {
            let solver = StateSolver::new(&case.adjoint_data(), &space, cfg.solver.clone())?;
            let state = solver.solve(&grid, Forcing::Field(forcing.as_ref()))?;
            let yt = discrete_target(&solver)?;
            let adj = solve_adjoint(&solver, &state, &yt)?;
            adjoint_errors(case.adjoint().as_ref(), &adj, quad)
        }
        StudyKind::Control => Err(Error::invalid("control studies have no exact solution")),
    }
}

/// The tracking problem of a control study on the case.
pub fn control_problem_data(case: &ManufacturedCase, setup: &ControlSetup) -> Result<ProblemData> {
    let dim = case.dim();
    Ok(ProblemData::new(
        case.nu(),
        case.alpha(),
        setup.gamma,
        1.0,
        1.0,
        case.t_end(),
        BoxBounds::uniform(dim, -setup.bound, setup.bound)?,
    )?
    .with_targets(case.velocity(), case.velocity()))
}

fn control_study(cfg: &StudyConfig, hier: &Hierarchy, mut table: RateTable) -> std::result::Result<RateTable, StudyFailure> {
    let dim = cfg.case.dim();
    let data = match control_problem_data(&cfg.case, &cfg.control) {
        Ok(d) => d,
        Err(e) => return Err(StudyFailure { table, level: 0, source: e }),
    };
    let solve_level = |l: usize| -> Result<(Control, f64, usize, KktAudit)> {
        let (refine, steps) = cfg.level_size(l);
        let space = MixedSpace::new(hier.meshes[refine].clone());
        let grid = TimeGrid::uniform(data.t_end, steps)?;
        let p = ReducedProblem::new(&data, &space, &grid, cfg.solver.clone())?;
        let u0 = Control::zeros(grid, space.mesh().clone(), data.bounds.clone())?;
        let r = optimize(&p, &u0, &cfg.control.optimizer)?;
        log::info!(
            "control level {l}: {} iterations, J = {:.10e}, stationarity {:.2e}, active {}/{}",
            r.iterations(),
            r.final_objective(),
            r.kkt.stationarity,
            r.kkt.n_lower + r.kkt.n_upper,
            r.control.values().len()
        );
        if !r.converged() {
            return Err(Error::Optimizer {
                iterate: r.iterations(),
                source: Box::new(Error::invalid(format!("optimizer stopped: {:?}", r.termination))),
            });
        }
        Ok((r.control.clone(), r.final_objective(), r.iterations(), r.kkt))
    };
    let top = cfg.levels;
    let (u_ref, j_ref, _, kkt_ref) = match solve_level(top) {
        Ok(v) => v,
        Err(e) => return Err(StudyFailure { table, level: top, source: e }),
    };
    table.reference_kkt = Some(kkt_ref);
    let (_, steps_ref) = cfg.level_size(top);
    let w_ref = control_weights(u_ref.grid(), &hier.meshes[top]);
    for l in 0..cfg.levels {
        let (u, j, its, kkt) = match solve_level(l) {
            Ok(v) => v,
            Err(e) => return Err(StudyFailure { table, level: l, source: e }),
        };
        let (_, steps) = cfg.level_size(l);
        let anc = hier.ancestors(top, l);
        let up = prolong_control(u.values(), dim, &anc, hier.meshes[l].n_cells(), steps_ref / steps, steps_ref);
        let d: Vec<f64> = up.iter().zip(u_ref.values()).map(|(a, b)| a - b).collect();
        let err = crate::control::l2_norm(&d, &w_ref);
        table.rows.push(RateRow {
            level: l,
            h: hier.meshes[l].h(),
            tau: data.t_end / steps as f64,
            errors: vec![err, (j - j_ref).abs()],
            iterations: Some(its),
            kkt: Some(kkt),
        });
    }
    Ok(table)
}
