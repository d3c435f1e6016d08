//! Manufactured solutions. Velocities are curls of separable potentials, so
//! they are divergence free and vanish on the boundary of the unit box; all
//! derivatives are exact closed forms.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Mat3, ScalarField, SharedField, Vec3, VectorField};
use crate::mesh::Point;
use crate::problem::{BoxBounds, ProblemData};

/// One-dimensional factor of a separable potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `s²(1 − s)²`.
    Bump,
    /// `sin²(πs)`.
    SinSq,
    One,
}

impl Profile {
    /// Value and first three derivatives.
    pub fn eval(self, s: f64) -> [f64; 4] {
        match self {
            Profile::Bump => [
                s * s * (1.0 - s) * (1.0 - s),
                2.0 * s - 6.0 * s * s + 4.0 * s * s * s,
                2.0 - 12.0 * s + 12.0 * s * s,
                -12.0 + 24.0 * s,
            ],
            Profile::SinSq => {
                let (sn, cs) = (2.0 * PI * s).sin_cos();
                [
                    (PI * s).sin().powi(2),
                    PI * sn,
                    2.0 * PI * PI * cs,
                    -4.0 * PI * PI * PI * sn,
                ]
            }
            Profile::One => [1.0, 0.0, 0.0, 0.0],
        }
    }
}

/// Time factor of a separable space-time field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// `1 + t`.
    Linear,
    /// `e^{rt}`.
    Exp(f64),
    /// `cos(ωt)`.
    Cos(f64),
    /// `sin(T − t)`, vanishing at `t = T`.
    SinToEnd(f64),
}

impl TimeProfile {
    /// Value and first derivative.
    pub fn eval(self, t: f64) -> [f64; 2] {
        match self {
            TimeProfile::Constant(c) => [c, 0.0],
            TimeProfile::Linear => [1.0 + t, 1.0],
            TimeProfile::Exp(r) => {
                let e = (r * t).exp();
                [e, r * e]
            }
            TimeProfile::Cos(w) => [(w * t).cos(), -w * (w * t).sin()],
            TimeProfile::SinToEnd(end) => [(end - t).sin(), -(end - t).cos()],
        }
    }
}

/// `curl` of the potential `A φ`, `φ = amp · f₀(x) f₁(y) f₂(z)`: in 2D the
/// stream-function velocity `(∂_y φ, −∂_x φ)`, in 3D `curl(φ, φ, φ)`. Both
/// are `Y_j = Σ_m C_{jm} ∂_m φ` with `C` antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SolenoidalShape {
    dim: usize,
    amp: f64,
    profiles: [Profile; 3],
}

const CURL_2D: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]];
const CURL_3D: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];

impl SolenoidalShape {
    pub fn new(dim: usize, amp: f64, profiles: [Profile; 3]) -> Self {
        assert!(dim == 2 || dim == 3);
        Self { dim, amp, profiles }
    }

    fn curl(&self) -> &[[f64; 3]; 3] {
        if self.dim == 2 {
            &CURL_2D
        } else {
            &CURL_3D
        }
    }

    // ∂^{a} φ for a multi-index given as derivative orders per axis.
    fn tables(&self, x: &Point) -> [[f64; 4]; 3] {
        let mut t = [[1.0, 0.0, 0.0, 0.0]; 3];
        for i in 0..self.dim {
            t[i] = self.profiles[i].eval(x[i]);
        }
        t
    }

    fn partial(&self, t: &[[f64; 4]; 3], orders: [usize; 3]) -> f64 {
        self.amp * t[0][orders[0]] * t[1][orders[1]] * t[2][orders[2]]
    }

    fn unit(i: usize) -> [usize; 3] {
        let mut o = [0; 3];
        o[i] = 1;
        o
    }

    pub fn value(&self, x: &Point) -> Vec3 {
        let t = self.tables(x);
        let c = self.curl();
        let mut y = [0.0; 3];
        for (j, yj) in y.iter_mut().enumerate().take(self.dim) {
            for m in 0..self.dim {
                if c[j][m] != 0.0 {
                    *yj += c[j][m] * self.partial(&t, Self::unit(m));
                }
            }
        }
        y
    }

    /// `g[j][i] = ∂_i Y_j`.
    pub fn gradient(&self, x: &Point) -> Mat3 {
        let t = self.tables(x);
        let c = self.curl();
        let mut g = [[0.0; 3]; 3];
        for j in 0..self.dim {
            for m in 0..self.dim {
                if c[j][m] == 0.0 {
                    continue;
                }
                for i in 0..self.dim {
                    let mut o = Self::unit(m);
                    o[i] += 1;
                    g[j][i] += c[j][m] * self.partial(&t, o);
                }
            }
        }
        g
    }

    pub fn laplacian(&self, x: &Point) -> Vec3 {
        let t = self.tables(x);
        let c = self.curl();
        let mut l = [0.0; 3];
        for j in 0..self.dim {
            for m in 0..self.dim {
                if c[j][m] == 0.0 {
                    continue;
                }
                for i in 0..self.dim {
                    let mut o = Self::unit(m);
                    o[i] += 2;
                    l[j] += c[j][m] * self.partial(&t, o);
                }
            }
        }
        l
    }
}

/// `Π_i cos(π x_i)`: zero mean over the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosinePressure {
    pub dim: usize,
}

impl CosinePressure {
    pub fn value(&self, x: &Point) -> f64 {
        (0..self.dim).map(|i| (PI * x[i]).cos()).product()
    }

    pub fn gradient(&self, x: &Point) -> Vec3 {
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate().take(self.dim) {
            *gi = -PI * (PI * x[i]).sin();
            for j in (0..self.dim).filter(|&j| j != i) {
                *gi *= (PI * x[j]).cos();
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CaseDef {
    name: String,
    dim: usize,
    nu: f64,
    alpha: f64,
    t_end: f64,
    shape: SolenoidalShape,
    g: TimeProfile,
    pressure: CosinePressure,
    gp: TimeProfile,
    adjoint_shape: SolenoidalShape,
    h: TimeProfile,
}

/// Exact `(y, p)` with the matching forcing, plus an exact adjoint
/// `λ = h(t) Λ(x)` (`h(T) = 0`) and the `y_Q` that makes it the adjoint of
/// `y` for `α_T = α_Q = 1`, `y_T = y(T)`.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    def: Arc<CaseDef>,
}

/// Names accepted by [`build_case`].
pub const CATALOGUE: [&str; 3] = ["poly-sine-2d", "taylor-green-2d", "vector-potential-3d"];

/// Looks up a catalogued case with its default `ν`, `α` and `T`.
pub fn build_case(name: &str) -> Result<ManufacturedCase> {
    use Profile::*;
    let def = match name {
        "poly-sine-2d" => CaseDef {
            name: name.into(),
            dim: 2,
            nu: 0.1,
            alpha: 0.3,
            t_end: 1.0,
            shape: SolenoidalShape::new(2, 4.0, [Bump, SinSq, One]),
            g: TimeProfile::Cos(1.0),
            pressure: CosinePressure { dim: 2 },
            gp: TimeProfile::Linear,
            adjoint_shape: SolenoidalShape::new(2, 1.0 / PI, [SinSq, SinSq, One]),
            h: TimeProfile::SinToEnd(1.0),
        },
        "taylor-green-2d" => CaseDef {
            name: name.into(),
            dim: 2,
            nu: 0.05,
            alpha: 0.2,
            t_end: 1.0,
            shape: SolenoidalShape::new(2, 1.0 / PI, [SinSq, SinSq, One]),
            g: TimeProfile::Exp(-1.0),
            pressure: CosinePressure { dim: 2 },
            gp: TimeProfile::Exp(-2.0),
            adjoint_shape: SolenoidalShape::new(2, 4.0, [SinSq, Bump, One]),
            h: TimeProfile::SinToEnd(1.0),
        },
        "vector-potential-3d" => CaseDef {
            name: name.into(),
            dim: 3,
            nu: 0.1,
            alpha: 0.3,
            t_end: 0.5,
            shape: SolenoidalShape::new(3, 1024.0, [Bump, Bump, Bump]),
            g: TimeProfile::Linear,
            pressure: CosinePressure { dim: 3 },
            gp: TimeProfile::Constant(1.0),
            adjoint_shape: SolenoidalShape::new(3, 512.0, [Bump, Bump, Bump]),
            h: TimeProfile::SinToEnd(0.5),
        },
        _ => return Err(Error::UnknownCase(name.to_string())),
    };
    Ok(ManufacturedCase { def: Arc::new(def) })
}

impl ManufacturedCase {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn dim(&self) -> usize {
        self.def.dim
    }

    pub fn nu(&self) -> f64 {
        self.def.nu
    }

    pub fn alpha(&self) -> f64 {
        self.def.alpha
    }

    pub fn t_end(&self) -> f64 {
        self.def.t_end
    }

    /// Same case with other `ν`, `α`, `T`; the forcing follows.
    pub fn with_params(&self, nu: f64, alpha: f64, t_end: f64) -> Result<Self> {
        if !(nu > 0.0 && alpha != 0.0 && t_end > 0.0) {
            return Err(Error::invalid("case parameters need ν > 0, α ≠ 0, T > 0"));
        }
        let mut def = (*self.def).clone();
        def.nu = nu;
        def.alpha = alpha;
        def.t_end = t_end;
        if let TimeProfile::SinToEnd(_) = def.h {
            def.h = TimeProfile::SinToEnd(t_end);
        }
        Ok(Self { def: Arc::new(def) })
    }

    fn field(&self, kind: Kind) -> SharedField {
        Arc::new(CaseField {
            def: self.def.clone(),
            kind,
        })
    }

    /// Exact velocity `y`, with gradient.
    pub fn velocity(&self) -> SharedField {
        self.field(Kind::Velocity)
    }

    /// `u = y_t − νΔy − α²Δy_t + (y·∇)y + ∇p`.
    pub fn forcing(&self) -> SharedField {
        self.field(Kind::Forcing)
    }

    /// Exact zero-mean pressure `p`.
    pub fn pressure(&self) -> Arc<dyn ScalarField> {
        let def = self.def.clone();
        Arc::new(move |x: &Point, t: f64| def.gp.eval(t)[0] * def.pressure.value(x))
    }

    /// Exact adjoint `λ`, with gradient.
    pub fn adjoint(&self) -> SharedField {
        self.field(Kind::Adjoint)
    }

    /// `y_Q` for which `λ` solves the adjoint equation with `α_Q = 1`.
    pub fn adjoint_target(&self) -> SharedField {
        self.field(Kind::AdjointTarget)
    }

    /// `ν`, `α`, `T` of the case with `y_0 = y(0)`, zero targets and unit
    /// weights; no box.
    pub fn state_data(&self) -> ProblemData {
        let d = &self.def;
        ProblemData::new(d.nu, d.alpha, 1.0, 1.0, 0.0, d.t_end, BoxBounds::unbounded(d.dim))
            .expect("catalogue parameters are valid")
            .with_initial(self.velocity())
    }

    /// [`ManufacturedCase::state_data`] with `α_T = α_Q = 1`, `y_T = y(T)`
    /// and `y_Q` from [`ManufacturedCase::adjoint_target`].
    pub fn adjoint_data(&self) -> ProblemData {
        let mut data = self.state_data();
        data.alpha_q = 1.0;
        data.with_targets(self.velocity(), self.adjoint_target())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Velocity,
    Forcing,
    Adjoint,
    AdjointTarget,
}

struct CaseField {
    def: Arc<CaseDef>,
    kind: Kind,
}

impl CaseDef {
    fn forcing(&self, x: &Point, t: f64) -> Vec3 {
        let [g, dg] = self.g.eval(t);
        let y = self.shape.value(x);
        let gy = self.shape.gradient(x);
        let ly = self.shape.laplacian(x);
        let gp = self.gp.eval(t)[0];
        let dp = self.pressure.gradient(x);
        let a2 = self.alpha * self.alpha;
        let mut u = [0.0; 3];
        for j in 0..self.dim {
            let conv: f64 = (0..self.dim).map(|i| y[i] * gy[j][i]).sum();
            u[j] = dg * (y[j] - a2 * ly[j]) - self.nu * g * ly[j] + g * g * conv + gp * dp[j];
        }
        u
    }

    // y_Q = y − [−λ_t − νΔλ + α²Δλ_t − (y·∇)λ + ½(∇y)ᵀλ − ½(∇λ)ᵀy + ∇r],
    // the strong form of the discrete adjoint's c-couplings; r = h Q.
    fn adjoint_target(&self, x: &Point, t: f64) -> Vec3 {
        let g = self.g.eval(t)[0];
        let [h, dh] = self.h.eval(t);
        let y = self.shape.value(x);
        let gy = self.shape.gradient(x);
        let l = self.adjoint_shape.value(x);
        let gl = self.adjoint_shape.gradient(x);
        let ll = self.adjoint_shape.laplacian(x);
        let dq = self.pressure.gradient(x);
        let a2 = self.alpha * self.alpha;
        let mut out = [0.0; 3];
        for j in 0..self.dim {
            let adv: f64 = (0..self.dim).map(|i| y[i] * gl[j][i]).sum();
            let gyt: f64 = (0..self.dim).map(|i| gy[i][j] * l[i]).sum();
            let glt: f64 = (0..self.dim).map(|i| gl[i][j] * y[i]).sum();
            let lhs = -dh * l[j] - self.nu * h * ll[j] + a2 * dh * ll[j] + g * h * (-adv + 0.5 * gyt - 0.5 * glt)
                + h * dq[j];
            out[j] = g * y[j] - lhs;
        }
        out
    }
}

impl VectorField for CaseField {
    fn value(&self, x: &Point, t: f64) -> Vec3 {
        let d = &self.def;
        match self.kind {
            Kind::Velocity => scale(d.shape.value(x), d.g.eval(t)[0]),
            Kind::Forcing => d.forcing(x, t),
            Kind::Adjoint => scale(d.adjoint_shape.value(x), d.h.eval(t)[0]),
            Kind::AdjointTarget => d.adjoint_target(x, t),
        }
    }

    fn gradient(&self, x: &Point, t: f64) -> Option<Mat3> {
        let d = &self.def;
        let (m, s) = match self.kind {
            Kind::Velocity => (d.shape.gradient(x), d.g.eval(t)[0]),
            Kind::Adjoint => (d.adjoint_shape.gradient(x), d.h.eval(t)[0]),
            Kind::Forcing | Kind::AdjointTarget => return None,
        };
        Some(m.map(|row| row.map(|v| s * v)))
    }
}

fn scale(v: Vec3, s: f64) -> Vec3 {
    v.map(|x| s * x)
}
