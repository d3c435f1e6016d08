//! TOML run configuration. Every section rejects unknown keys.
//!
//! ```toml
//! [problem]
//! case = "poly-sine-2d"     # or give dim + expressions below
//! nu = 0.1
//! alpha = 0.3
//! gamma = 1e-2
//! alpha_t = 1.0
//! alpha_q = 1.0
//! t_end = 1.0
//! lower = -1.0              # scalar or one value per component
//! upper = [1.0, 0.5]
//! y0 = ["sin(pi*x)^2*sin(2*pi*y)", "-sin(pi*y)^2*sin(2*pi*x)"]
//! y_target = ["0", "0"]
//! y_q = ["0", "0"]
//! forcing = ["0", "0"]
//! initial_control = 0.0
//!
//! [discretization]
//! dim = 2
//! n = 8                     # or mesh = "domain.mesh"
//! refinements = 0
//! steps = 16                # or tau = 0.05, or coupling = "tau-h2"
//!
//! [solver]
//! max_newton = 25
//!
//! [optimizer]
//! tol = 1e-8
//!
//! [output]
//! dir = "out"
//! vtk = true
//! every = 1
//!
//! [study]
//! kind = "state"
//! coupling = "tau-h2"
//! levels = 4
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::expr::ExprField;
use crate::error::{Error, Result};
use crate::field::SharedField;
use crate::mesh::{BoxDomain, Mesh};
use crate::optimize::OptimizeOptions;
use crate::problem::{BoxBounds, ProblemData};
use crate::state::SolverOptions;
use crate::time::TimeGrid;
use crate::verification::study::{control_problem_data, ControlSetup};
use crate::verification::{build_case, Coupling, ManufacturedCase, StudyConfig, StudyKind};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub output: OutputSection,
    pub study: Option<StudySection>,
}

/// Scalar applied to every component, or one value per component.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Components {
    fn expand(&self, dim: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            Components::Scalar(v) => Ok(vec![*v; dim]),
            Components::Vector(v) if v.len() == dim => Ok(v.clone()),
            Components::Vector(v) => Err(Error::Config(format!(
                "`{key}` has {} components, expected {dim}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub case: Option<String>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha_t: Option<f64>,
    pub alpha_q: Option<f64>,
    pub t_end: Option<f64>,
    pub lower: Option<Components>,
    pub upper: Option<Components>,
    pub y0: Option<Vec<String>>,
    pub y_target: Option<Vec<String>>,
    pub y_q: Option<Vec<String>>,
    /// Fixed right-hand side of `solve-state` and `solve-adjoint`.
    pub forcing: Option<Vec<String>>,
    /// Constant starting control of `optimize`.
    pub initial_control: Option<Components>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    pub dim: Option<usize>,
    /// Subdivisions per axis of the structured unit box mesh.
    pub n: Option<usize>,
    /// Mesh file in the native text format, instead of `n`.
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub refinements: usize,
    pub steps: Option<usize>,
    pub tau: Option<f64>,
    /// `"tau-h"` or `"tau-h2"`: `τ = tau_scale · h` or `tau_scale · h²`.
    pub coupling: Option<String>,
    pub tau_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub max_newton: Option<usize>,
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
    pub picard_after: Option<usize>,
    pub max_picard: Option<usize>,
    pub force_picard: Option<bool>,
    pub step_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub tol: Option<f64>,
    pub max_iterations: Option<usize>,
    pub armijo: Option<f64>,
    pub backtrack: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub initial_step: Option<f64>,
    pub min_step: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write VTK snapshots (default true).
    pub vtk: Option<bool>,
    /// Snapshot stride; the last snapshot is always written.
    pub every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// Defaults to `problem.case`.
    pub case: Option<String>,
    pub kind: String,
    pub coupling: String,
    pub levels: usize,
    pub base_n: Option<usize>,
    pub base_steps: Option<usize>,
    /// Control studies: control cost and symmetric bound.
    pub gamma: Option<f64>,
    pub bound: Option<f64>,
}

/// What a problem is assembled for; selects the defaults a manufactured
/// case supplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    State,
    Adjoint,
    Optimize,
}

macro_rules! overlay {
    ($target:expr, $section:expr, $($field:ident),*) => {
        $(if let Some(v) = $section.$field { $target.$field = v; })*
    };
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // Mesh paths are relative to the configuration file.
        if let (Some(mesh), Some(dir)) = (&mut cfg.discretization.mesh, path.parent()) {
            if mesh.is_relative() {
                *mesh = dir.join(&*mesh);
            }
        }
        cfg.check().map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        Ok(cfg)
    }

    /// Step specification, study settings and, when a problem is given,
    /// expressions and physical parameters.
    fn check(&self) -> Result<()> {
        let d = &self.discretization;
        let given = [d.steps.is_some(), d.tau.is_some(), d.coupling.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(Error::Config("give at most one of `steps`, `tau`, `coupling`".into()));
        }
        if d.n.is_some() && d.mesh.is_some() {
            return Err(Error::Config("give either `n` or `mesh`, not both".into()));
        }
        if let Some(c) = &d.coupling {
            if !matches!(c.as_str(), "tau-h" | "tau-h2") {
                return Err(Error::Config(format!("unknown coupling `{c}`, expected tau-h or tau-h2")));
            }
        }
        if d.steps == Some(0) || d.n == Some(0) || self.output.every == Some(0) {
            return Err(Error::Config("`steps`, `n` and `every` must be positive".into()));
        }
        if let Some(s) = &self.study {
            self.study_config_from(s)?.validate()?;
            return Ok(());
        }
        if self.problem != ProblemSection::default() {
            let dim = self.dim()?;
            self.problem_data(Purpose::State)?;
            self.forcing(dim)?;
        }
        Ok(())
    }

    pub fn case(&self) -> Result<Option<ManufacturedCase>> {
        let Some(name) = &self.problem.case else {
            return Ok(None);
        };
        let case = build_case(name)?;
        let p = &self.problem;
        if p.nu.is_some() || p.alpha.is_some() || p.t_end.is_some() {
            let nu = p.nu.unwrap_or(case.nu());
            let alpha = p.alpha.unwrap_or(case.alpha());
            let t_end = p.t_end.unwrap_or(case.t_end());
            return Ok(Some(case.with_params(nu, alpha, t_end)?));
        }
        Ok(Some(case))
    }

    /// Spatial dimension from the case, `discretization.dim` or the mesh.
    pub fn dim(&self) -> Result<usize> {
        let from_case = self.case()?.map(|c| c.dim());
        let dim = match (from_case, self.discretization.dim) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("case has dimension {a}, `dim` says {b}")));
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => match &self.discretization.mesh {
                Some(path) => Mesh::load(path)?.dim(),
                None => 2,
            },
        };
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("`dim` must be 2 or 3, got {dim}")));
        }
        Ok(dim)
    }

    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        let d = &self.discretization;
        let mut mesh = match &d.mesh {
            Some(path) => Mesh::load(path)?,
            None => Mesh::build_structured(&BoxDomain::unit(self.dim()?), d.n.unwrap_or(4))?,
        };
        for _ in 0..d.refinements {
            mesh = mesh.refine_uniform();
        }
        Ok(Arc::new(mesh))
    }

    /// Uniform grid from `steps`, `tau` (rounded up to a whole number of
    /// steps) or the coupling with the mesh size `h`.
    pub fn time_grid(&self, t_end: f64, h: f64) -> Result<TimeGrid> {
        let d = &self.discretization;
        let scale = d.tau_scale.unwrap_or(1.0);
        let tau = match (d.steps, d.tau, d.coupling.as_deref()) {
            (Some(n), _, _) => return TimeGrid::uniform(t_end, n),
            (_, Some(tau), _) => tau,
            (_, _, Some("tau-h")) => scale * h,
            (_, _, Some(_)) => scale * h * h,
            _ => return TimeGrid::uniform(t_end, 10),
        };
        if !(tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {tau}")));
        }
        let n = (t_end / tau * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        TimeGrid::uniform(t_end, n)
    }

    fn field(&self, key: &str, exprs: &Option<Vec<String>>, dim: usize) -> Result<Option<SharedField>> {
        let Some(exprs) = exprs else { return Ok(None) };
        if exprs.len() != dim {
            return Err(Error::Config(format!(
                "`{key}` has {} components, expected {dim}",
                exprs.len()
            )));
        }
        let f = ExprField::parse(exprs).map_err(|e| Error::Config(format!("`{key}`: {e}")))?;
        Ok(Some(f.into_shared()))
    }

    /// Fixed forcing: the expression if given, else the case forcing for
    /// state and adjoint solves.
    pub fn forcing(&self, dim: usize) -> Result<Option<SharedField>> {
        if let Some(f) = self.field("forcing", &self.problem.forcing, dim)? {
            return Ok(Some(f));
        }
        Ok(self.case()?.map(|c| c.forcing()))
    }

    /// Problem data: case defaults for `purpose`, then explicit keys.
    pub fn problem_data(&self, purpose: Purpose) -> Result<ProblemData> {
        let p = &self.problem;
        let dim = self.dim()?;
        let mut data = match self.case()? {
            Some(case) => match purpose {
                Purpose::State => case.state_data(),
                Purpose::Adjoint => case.adjoint_data(),
                Purpose::Optimize => control_problem_data(&case, &ControlSetup::default())?,
            },
            None => {
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| Error::Config(format!("`problem.{key}` is required without a case")))
                };
                ProblemData::new(
                    need(p.nu, "nu")?,
                    need(p.alpha, "alpha")?,
                    1.0,
                    1.0,
                    0.0,
                    need(p.t_end, "t_end")?,
                    BoxBounds::unbounded(dim),
                )
                .map_err(|e| Error::Config(e.to_string()))?
            }
        };
        overlay!(data, p, gamma, alpha_t, alpha_q);
        if p.lower.is_some() || p.upper.is_some() {
            let lower = match &p.lower {
                Some(c) => c.expand(dim, "lower")?,
                None => data.bounds.lower().to_vec(),
            };
            let upper = match &p.upper {
                Some(c) => c.expand(dim, "upper")?,
                None => data.bounds.upper().to_vec(),
            };
            data.bounds = BoxBounds::new(lower, upper).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(f) = self.field("y0", &p.y0, dim)? {
            data.y0 = f;
        }
        if let Some(f) = self.field("y_target", &p.y_target, dim)? {
            data.y_target = f;
        }
        if let Some(f) = self.field("y_q", &p.y_q, dim)? {
            data.y_q = f;
        }
        let check = match purpose {
            Purpose::Optimize => data.validate(),
            _ => data.validate_physics(),
        };
        check.map_err(|e| Error::Config(e.to_string()))?;
        Ok(data)
    }

    /// Zero targets are the default for problems without a case.
    pub fn has_targets(&self) -> bool {
        self.problem.case.is_some() || self.problem.y_target.is_some() || self.problem.y_q.is_some()
    }

    pub fn initial_control(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.problem.initial_control {
            Some(c) => c.expand(dim, "initial_control"),
            None => Ok(vec![0.0; dim]),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        let s = &self.solver;
        overlay!(o, s, max_newton, atol, rtol, picard_after, max_picard, force_picard, step_tol);
        o
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        let mut o = OptimizeOptions::default();
        let s = &self.optimizer;
        overlay!(o, s, tol, max_iterations, armijo, backtrack, max_backtracks, initial_step, min_step, max_step);
        o
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn write_vtk(&self) -> bool {
        self.output.vtk.unwrap_or(true)
    }

    /// Snapshot indices to write out of `0..=last`.
    pub fn snapshot_indices(&self, first: usize, last: usize) -> Vec<usize> {
        let every = self.output.every.unwrap_or(1);
        let mut idx: Vec<usize> = (first..=last).step_by(every).collect();
        if idx.last() != Some(&last) {
            idx.push(last);
        }
        idx
    }

    pub fn study_config(&self) -> Result<StudyConfig> {
        let s = self
            .study
            .as_ref()
            .ok_or_else(|| Error::Config("missing [study] section".into()))?;
        self.study_config_from(s)
    }

    fn study_config_from(&self, s: &StudySection) -> Result<StudyConfig> {
        let case = s
            .case
            .as_ref()
            .or(self.problem.case.as_ref())
            .ok_or_else(|| Error::Config("a study needs `study.case` or `problem.case`".into()))?;
        let mut cfg = StudyConfig::new(case, StudyKind::parse(&s.kind)?, Coupling::parse(&s.coupling)?, s.levels)?;
        if s.case.is_none() {
            if let Some(c) = self.case()? {
                cfg.case = c;
            }
        }
        if let Some(v) = s.base_n {
            cfg.base_n = v;
        }
        if let Some(v) = s.base_steps {
            cfg.base_steps = v;
        }
        if let Some(v) = s.gamma {
            cfg.control.gamma = v;
        }
        if let Some(v) = s.bound {
            cfg.control.bound = v;
        }
        cfg.solver = self.solver_options();
        cfg.control.optimizer = self.optimize_options();
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_name_the_key() {
        let e = RunConfig::parse("[problem]\nnuu = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("nuu"), "{e}");
        let e = RunConfig::parse("[discretisation]\nn = 2\n").unwrap_err().to_string();
        assert!(e.contains("discretisation"), "{e}");
    }

    #[test]
    fn explicit_problem() {
        let cfg = RunConfig::parse(
            "[problem]\nnu = 0.1\nalpha = 0.5\nt_end = 2.0\nlower = -1.0\nupper = [1.0, 2.0]\n\
             y0 = [\"x*(1-x)\", \"0\"]\n[discretization]\nn = 3\ntau = 0.3\n",
        )
        .unwrap();
        let data = cfg.problem_data(Purpose::State).unwrap();
        assert_eq!(data.bounds.upper(), &[1.0, 2.0]);
        assert_eq!(data.y0.value(&[0.5, 0.1, 0.0], 0.0)[0], 0.25);
        let grid = cfg.time_grid(data.t_end, 0.1).unwrap();
        assert_eq!(grid.n_steps(), 7);
    }

    #[test]
    fn step_specifications() {
        let cfg = RunConfig::parse("[problem]\ncase = \"poly-sine-2d\"\n[discretization]\ncoupling = \"tau-h2\"\n").unwrap();
        assert_eq!(cfg.time_grid(1.0, 0.25).unwrap().n_steps(), 16);
        let cfg = RunConfig::parse("[problem]\ncase = \"poly-sine-2d\"\n[discretization]\ntau = 0.25\n").unwrap();
        assert_eq!(cfg.time_grid(1.0, 0.25).unwrap().n_steps(), 4);
        assert!(RunConfig::parse("[problem]\ncase = \"poly-sine-2d\"\n[discretization]\ntau = 0.1\nsteps = 3\n").is_err());
        assert!(RunConfig::parse("[problem]\ncase = \"poly-sine-2d\"\n[discretization]\ncoupling = \"tau-h3\"\n").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            "[problem]\nnu = 0.1\nalpha = 0.5\n",
            "[problem]\nnu = -0.1\nalpha = 0.5\nt_end = 1.0\n",
            "[problem]\ncase = \"poly-sine-2d\"\nlower = 1.0\nupper = -1.0\n",
            "[problem]\ncase = \"poly-sine-2d\"\ny0 = [\"x\"]\n",
            "[problem]\ncase = \"poly-sine-2d\"\ny0 = [\"x +\", \"y\"]\n",
            "[problem]\ncase = \"nope\"\n",
            "[problem]\ncase = \"poly-sine-2d\"\n[study]\nkind = \"state\"\ncoupling = \"tau-h2\"\nlevels = 2\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn case_parameters_can_be_overridden() {
        let cfg = RunConfig::parse("[problem]\ncase = \"taylor-green-2d\"\nnu = 0.2\n").unwrap();
        let case = cfg.case().unwrap().unwrap();
        assert_eq!(case.nu(), 0.2);
        assert_eq!(case.alpha(), build_case("taylor-green-2d").unwrap().alpha());
    }

    #[test]
    fn snapshot_stride_keeps_the_last() {
        let cfg = RunConfig::parse("[output]\nevery = 3\n[problem]\ncase = \"poly-sine-2d\"\n").unwrap();
        assert_eq!(cfg.snapshot_indices(0, 7), vec![0, 3, 6, 7]);
    }
}
