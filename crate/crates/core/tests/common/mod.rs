#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use nsvoigt::fem::MixedSpace;
use nsvoigt::field::{FnField, SharedField};
use nsvoigt::mesh::{BoxDomain, Mesh, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn unit_space(dim: usize, n: usize) -> Arc<MixedSpace> {
    MixedSpace::new(Arc::new(Mesh::build_structured(&BoxDomain::unit(dim), n).unwrap()))
}

/// `amp · curl(sin²(πx) sin²(πy))`, with gradient.
pub fn vortex(amp: f64) -> SharedField {
    Arc::new(FnField::with_gradient(
        move |x: &Point, _t: f64| {
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            let (s2x, s2y) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[1]).sin());
            [amp * PI * sx * sx * s2y, -amp * PI * sy * sy * s2x, 0.0]
        },
        move |x: &Point, _t: f64| {
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            let (s2x, c2x, s2y, c2y) = (
                (2.0 * PI * x[0]).sin(),
                (2.0 * PI * x[0]).cos(),
                (2.0 * PI * x[1]).sin(),
                (2.0 * PI * x[1]).cos(),
            );
            let a = amp * PI * PI;
            [
                [a * s2x * s2y, 2.0 * a * sx * sx * c2y, 0.0],
                [-2.0 * a * sy * sy * c2x, -a * s2y * s2x, 0.0],
                [0.0; 3],
            ]
        },
    ))
}

/// A smooth, time-dependent, non-solenoidal target.
pub fn wavy_target() -> SharedField {
    Arc::new(FnField::with_gradient(
        |x: &Point, t: f64| [(2.0 * x[1] + t).sin(), x[0] * (1.0 - x[0]) * (1.0 + t), 0.0],
        |x: &Point, t: f64| {
            [
                [0.0, 2.0 * (2.0 * x[1] + t).cos(), 0.0],
                [(1.0 - 2.0 * x[0]) * (1.0 + t), 0.0, 0.0],
                [0.0; 3],
            ]
        },
    ))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
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
