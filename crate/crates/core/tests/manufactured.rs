//! The catalogue's closed-form derivatives against forward-mode automatic
//! differentiation of the potentials, written out independently here.

mod common;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use common::*;
use nsvoigt::mesh::Point;
use nsvoigt::verification::{build_case, ManufacturedCase, CATALOGUE};
use nsvoigt::Error;
use rand::Rng;

// Truncated Taylor polynomials in (x, y, z, t) up to total degree 4.
const ORDER: usize = 4;

struct Tables {
    monos: Vec<[usize; 4]>,
    product: Vec<Vec<Option<usize>>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos = Vec::new();
        for a in 0..=ORDER {
            for b in 0..=ORDER - a {
                for c in 0..=ORDER - a - b {
                    for d in 0..=ORDER - a - b - c {
                        monos.push([a, b, c, d]);
                    }
                }
            }
        }
        let product = monos
            .iter()
            .map(|m| {
                monos
                    .iter()
                    .map(|n| {
                        let s = [m[0] + n[0], m[1] + n[1], m[2] + n[2], m[3] + n[3]];
                        monos.iter().position(|k| *k == s)
                    })
                    .collect()
            })
            .collect();
        Tables { monos, product }
    })
}

#[derive(Clone)]
struct Jet(Vec<f64>);

impl Jet {
    fn constant(v: f64) -> Self {
        let mut c = vec![0.0; tables().monos.len()];
        c[0] = v;
        Jet(c)
    }

    fn var(i: usize, v: f64) -> Self {
        let mut j = Self::constant(v);
        let mut e = [0; 4];
        e[i] = 1;
        let k = tables().monos.iter().position(|m| *m == e).unwrap();
        j.0[k] = 1.0;
        j
    }

    fn scale(&self, s: f64) -> Self {
        Jet(self.0.iter().map(|v| v * s).collect())
    }

    // f(a + e) = Σ_k f^{(k)}(a) e^k / k!
    fn compose(&self, derivs: [f64; ORDER + 1]) -> Self {
        let mut e = self.clone();
        e.0[0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        let mut pow = Self::constant(1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1) {
            pow = &pow * &e;
            fact *= k as f64;
            out = &out + &pow.scale(d / fact);
        }
        out
    }

    fn sin(&self) -> Self {
        let (s, c) = self.0[0].sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    fn cos(&self) -> Self {
        let (s, c) = self.0[0].sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    fn exp(&self) -> Self {
        let e = self.0[0].exp();
        self.compose([e; ORDER + 1])
    }

    /// `∂^e f` at the expansion point.
    fn d(&self, e: [usize; 4]) -> f64 {
        let k = tables().monos.iter().position(|m| *m == e).unwrap();
        let fact: usize = e.iter().map(|&n| (1..=n).product::<usize>()).product();
        self.0[k] * fact as f64
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let t = tables();
        let mut c = vec![0.0; t.monos.len()];
        for (i, a) in self.0.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            for (j, b) in o.0.iter().enumerate().filter(|(_, b)| **b != 0.0) {
                if let Some(k) = t.product[i][j] {
                    c[k] += a * b;
                }
            }
        }
        Jet(c)
    }
}

fn bump(s: &Jet) -> Jet {
    let one_minus = &Jet::constant(1.0) - s;
    let a = s * &one_minus;
    &a * &a
}

fn sin_sq(s: &Jet) -> Jet {
    let v = s.scale(PI).sin();
    &v * &v
}

struct Potentials {
    // potential φ of y = curl; scalar stream function in 2D
    state: Box<dyn Fn(&[Jet; 4]) -> Jet>,
    adjoint: Box<dyn Fn(&[Jet; 4]) -> Jet>,
    pressure: Box<dyn Fn(&[Jet; 4]) -> Jet>,
    adjoint_pressure: Box<dyn Fn(&[Jet; 4]) -> Jet>,
}

fn potentials(name: &str) -> Potentials {
    let cos_p = |v: &[Jet; 4], dim: usize| {
        let mut p = Jet::constant(1.0);
        for x in v.iter().take(dim) {
            p = &p * &x.scale(PI).cos();
        }
        p
    };
    match name {
        "poly-sine-2d" => Potentials {
            state: Box::new(|v| &(&bump(&v[0]) * &sin_sq(&v[1])) * &v[3].cos().scale(4.0)),
            adjoint: Box::new(|v| {
                let h = (&Jet::constant(1.0) - &v[3]).sin();
                &(&sin_sq(&v[0]) * &sin_sq(&v[1])) * &h.scale(1.0 / PI)
            }),
            pressure: Box::new(move |v| &cos_p(v, 2) * &(&Jet::constant(1.0) + &v[3])),
            adjoint_pressure: Box::new(move |v| &cos_p(v, 2) * &(&Jet::constant(1.0) - &v[3]).sin()),
        },
        "taylor-green-2d" => Potentials {
            state: Box::new(|v| &(&sin_sq(&v[0]) * &sin_sq(&v[1])) * &v[3].scale(-1.0).exp().scale(1.0 / PI)),
            adjoint: Box::new(|v| {
                let h = (&Jet::constant(1.0) - &v[3]).sin();
                &(&sin_sq(&v[0]) * &bump(&v[1])) * &h.scale(4.0)
            }),
            pressure: Box::new(move |v| &cos_p(v, 2) * &v[3].scale(-2.0).exp()),
            adjoint_pressure: Box::new(move |v| &cos_p(v, 2) * &(&Jet::constant(1.0) - &v[3]).sin()),
        },
        "vector-potential-3d" => Potentials {
            state: Box::new(|v| {
                let b = &(&bump(&v[0]) * &bump(&v[1])) * &bump(&v[2]);
                &b * &(&Jet::constant(1.0) + &v[3]).scale(1024.0)
            }),
            adjoint: Box::new(|v| {
                let b = &(&bump(&v[0]) * &bump(&v[1])) * &bump(&v[2]);
                &b * &(&Jet::constant(0.5) - &v[3]).sin().scale(512.0)
            }),
            pressure: Box::new(move |v| cos_p(v, 3)),
            adjoint_pressure: Box::new(move |v| &cos_p(v, 3) * &(&Jet::constant(0.5) - &v[3]).sin()),
        },
        _ => unreachable!(),
    }
}

fn add(mut e: [usize; 4], i: usize, k: usize) -> [usize; 4] {
    e[i] += k;
    e
}

// y_j = Σ_m C_jm ∂_m φ; returns the requested derivative `extra` of y_j.
fn curl_d(phi: &Jet, dim: usize, j: usize, extra: [usize; 4]) -> f64 {
    let c2 = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]];
    let c3 = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];
    let c = if dim == 2 { c2 } else { c3 };
    (0..dim).map(|m| c[j][m] * phi.d(add(extra, m, 1))).sum()
}

struct Derived {
    y: [f64; 3],
    grad: [[f64; 3]; 3],
    lap: [f64; 3],
    y_t: [f64; 3],
    lap_t: [f64; 3],
}

fn derive(phi: &Jet, dim: usize) -> Derived {
    let mut d = Derived {
        y: [0.0; 3],
        grad: [[0.0; 3]; 3],
        lap: [0.0; 3],
        y_t: [0.0; 3],
        lap_t: [0.0; 3],
    };
    for j in 0..dim {
        d.y[j] = curl_d(phi, dim, j, [0; 4]);
        d.y_t[j] = curl_d(phi, dim, j, [0, 0, 0, 1]);
        for i in 0..dim {
            d.grad[j][i] = curl_d(phi, dim, j, add([0; 4], i, 1));
            d.lap[j] += curl_d(phi, dim, j, add([0; 4], i, 2));
            d.lap_t[j] += curl_d(phi, dim, j, add([0, 0, 0, 1], i, 2));
        }
    }
    d
}

fn jets(x: &Point, t: f64) -> [Jet; 4] {
    [Jet::var(0, x[0]), Jet::var(1, x[1]), Jet::var(2, x[2]), Jet::var(3, t)]
}

fn random_point(rng: &mut impl Rng, dim: usize, t_end: f64) -> (Point, f64) {
    let mut x = [0.0; 3];
    for xi in x.iter_mut().take(dim) {
        *xi = rng.random_range(0.0..1.0);
    }
    (x, rng.random_range(0.0..t_end))
}

fn check_case(case: &ManufacturedCase) {
    let dim = case.dim();
    let pots = potentials(case.name());
    let (nu, a2) = (case.nu(), case.alpha() * case.alpha());
    let (vel, force, lam, yq) = (case.velocity(), case.forcing(), case.adjoint(), case.adjoint_target());
    let p = case.pressure();
    let mut rng = rng(31);
    for _ in 0..100 {
        let (x, t) = random_point(&mut rng, dim, case.t_end());
        let v = jets(&x, t);
        let s = derive(&(pots.state)(&v), dim);
        let l = derive(&(pots.adjoint)(&v), dim);
        let pj = (pots.pressure)(&v);
        let rj = (pots.adjoint_pressure)(&v);

        let div: f64 = (0..dim).map(|i| vel.gradient(&x, t).unwrap()[i][i]).sum();
        assert!(div.abs() <= 1e-12, "{} div {div}", case.name());
        assert!((p.value(&x, t) - pj.d([0; 4])).abs() <= 1e-12);

        let yv = vel.value(&x, t);
        let yg = vel.gradient(&x, t).unwrap();
        let lv = lam.value(&x, t);
        let lg = lam.gradient(&x, t).unwrap();
        let u = force.value(&x, t);
        let q = yq.value(&x, t);
        for j in 0..dim {
            assert!((yv[j] - s.y[j]).abs() <= 1e-12);
            assert!((lv[j] - l.y[j]).abs() <= 1e-12);
            for i in 0..dim {
                assert!((yg[j][i] - s.grad[j][i]).abs() <= 1e-11);
                assert!((lg[j][i] - l.grad[j][i]).abs() <= 1e-11);
            }
            let conv: f64 = (0..dim).map(|i| s.y[i] * s.grad[j][i]).sum();
            let dp = pj.d(add([0; 4], j, 1));
            let res = s.y_t[j] - nu * s.lap[j] - a2 * s.lap_t[j] + conv + dp - u[j];
            assert!(res.abs() <= 1e-10, "{} momentum residual {res}", case.name());

            let adv: f64 = (0..dim).map(|i| s.y[i] * l.grad[j][i]).sum();
            let gyt: f64 = (0..dim).map(|i| s.grad[i][j] * l.y[i]).sum();
            let glt: f64 = (0..dim).map(|i| l.grad[i][j] * s.y[i]).sum();
            let dr = rj.d(add([0; 4], j, 1));
            let res = -l.y_t[j] - nu * l.lap[j] + a2 * l.lap_t[j] - adv + 0.5 * gyt - 0.5 * glt + dr - (s.y[j] - q[j]);
            assert!(res.abs() <= 1e-10, "{} adjoint residual {res}", case.name());
        }
    }
}

#[test]
fn catalogue_matches_automatic_differentiation() {
    for name in CATALOGUE {
        check_case(&build_case(name).unwrap());
    }
}

#[test]
fn reparametrized_case_keeps_residual_zero() {
    let case = build_case("taylor-green-2d").unwrap().with_params(0.3, 0.7, 1.0).unwrap();
    check_case(&case);
}

#[test]
fn pressures_have_zero_mean() {
    // tensor Gauss rule; cos(πx) integrates to zero exactly per axis
    let (x, w) = nsvoigt::quadrature::gauss_legendre(8);
    for name in CATALOGUE {
        let case = build_case(name).unwrap();
        let p = case.pressure();
        for t in [0.0, 0.3, case.t_end()] {
            let mut mean = 0.0;
            let dim = case.dim();
            let zs: Vec<usize> = if dim == 3 { (0..8).collect() } else { vec![0] };
            for i in 0..8 {
                for j in 0..8 {
                    for &k in &zs {
                        let pt = [0.5 * (x[i] + 1.0), 0.5 * (x[j] + 1.0), if dim == 3 { 0.5 * (x[k] + 1.0) } else { 0.0 }];
                        let wk = if dim == 3 { 0.5 * w[k] } else { 1.0 };
                        mean += 0.25 * w[i] * w[j] * wk * p.value(&pt, t);
                    }
                }
            }
            assert!(mean.abs() <= 1e-12, "{name} {mean}");
        }
    }
}

#[test]
fn velocities_vanish_on_the_boundary() {
    let mut rng = rng(2);
    for name in CATALOGUE {
        let case = build_case(name).unwrap();
        let dim = case.dim();
        for _ in 0..50 {
            let (mut x, t) = random_point(&mut rng, dim, case.t_end());
            let axis = rng.random_range(0..dim);
            x[axis] = if rng.random_bool(0.5) { 0.0 } else { 1.0 };
            for f in [case.velocity(), case.adjoint()] {
                assert!(f.value(&x, t).iter().all(|v| v.abs() <= 1e-14));
            }
        }
    }
}

#[test]
fn unknown_case_is_rejected() {
    assert!(matches!(build_case("kovasznay"), Err(Error::UnknownCase(n)) if n == "kovasznay"));
}
