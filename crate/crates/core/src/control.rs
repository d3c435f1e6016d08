//! Piecewise-constant controls on (interval × cell) pairs and the box
//! projection.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Mat3, Vec3, VectorField};
use crate::mesh::{Mesh, Point};
use crate::problem::BoxBounds;
use crate::time::TimeGrid;

/// Element of `U_{σ,ad}`: value `u_{n,K,j}` stored at
/// `((n − 1) * n_cells + K) * dim + j`.
#[derive(Debug, Clone)]
pub struct Control {
    grid: TimeGrid,
    mesh: Arc<Mesh>,
    bounds: BoxBounds,
    values: Vec<f64>,
}

impl Control {
    /// Checked constructor: `values` must already lie in the box.
    pub fn new(grid: TimeGrid, mesh: Arc<Mesh>, bounds: BoxBounds, values: Vec<f64>) -> Result<Self> {
        let dim = bounds.dim();
        if let Some(i) = (0..values.len()).find(|&i| !bounds.contains(i % dim, values[i])) {
            return Err(Error::invalid(format!("control entry {i} = {} lies outside the box", values[i])));
        }
        Self::project(grid, mesh, bounds, values)
    }

    /// Clamps `values` into the box.
    pub fn project(grid: TimeGrid, mesh: Arc<Mesh>, bounds: BoxBounds, mut values: Vec<f64>) -> Result<Self> {
        let dim = mesh.dim();
        if bounds.dim() != dim {
            return Err(Error::invalid(format!("bounds have {} components, mesh dimension is {dim}", bounds.dim())));
        }
        let expected = grid.n_steps() * mesh.n_cells() * dim;
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "control has {} values, expected {expected} (steps x cells x dim)",
                values.len()
            )));
        }
        project_box(&mut values, &bounds);
        Ok(Self {
            grid,
            mesh,
            bounds,
            values,
        })
    }

    pub fn constant(grid: TimeGrid, mesh: Arc<Mesh>, bounds: BoxBounds, c: &[f64]) -> Result<Self> {
        let n = grid.n_steps() * mesh.n_cells();
        let values = (0..n).flat_map(|_| c[..mesh.dim()].iter().copied()).collect();
        Self::project(grid, mesh, bounds, values)
    }

    pub fn zeros(grid: TimeGrid, mesh: Arc<Mesh>, bounds: BoxBounds) -> Result<Self> {
        let len = grid.n_steps() * mesh.n_cells() * mesh.dim();
        Self::project(grid, mesh, bounds, vec![0.0; len])
    }

    /// Same grid, mesh and bounds with new (projected) values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::project(self.grid.clone(), self.mesh.clone(), self.bounds.clone(), values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn index(&self, n: usize, k: usize, j: usize) -> usize {
        ((n - 1) * self.mesh.n_cells() + k) * self.dim() + j
    }

    /// `u_{n,K,j}`, `n` one-based.
    pub fn value(&self, n: usize, k: usize, j: usize) -> f64 {
        self.values[self.index(n, k, j)]
    }

    /// Values of interval `n` (one-based), cell-major.
    pub fn step(&self, n: usize) -> &[f64] {
        let len = self.mesh.n_cells() * self.dim();
        &self.values[(n - 1) * len..n * len]
    }

    /// Quadrature weights `τ_n |K|` of each entry.
    pub fn weights(&self) -> Vec<f64> {
        control_weights(&self.grid, &self.mesh)
    }

    /// `∫∫ u` per component.
    pub fn integral(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for (i, (v, w)) in self.values.iter().zip(self.weights()).enumerate() {
            out[i % dim] += v * w;
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values, &self.weights())
    }
}

/// `τ_n |K|` for every control entry.
pub fn control_weights(grid: &TimeGrid, mesh: &Mesh) -> Vec<f64> {
    let dim = mesh.dim();
    let mut w = Vec::with_capacity(grid.n_steps() * mesh.n_cells() * dim);
    for n in 1..=grid.n_steps() {
        for k in 0..mesh.n_cells() {
            let v = grid.tau(n) * mesh.cell_volume(k);
            w.extend(std::iter::repeat_n(v, dim));
        }
    }
    w
}

/// Weighted inner product `Σ a b w`.
pub fn inner(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

pub fn l2_norm(a: &[f64], w: &[f64]) -> f64 {
    inner(a, a, w).sqrt()
}

/// Componentwise clamp of a control-shaped vector into the box.
pub fn project_box(values: &mut [f64], bounds: &BoxBounds) {
    let dim = bounds.dim();
    for (i, v) in values.iter_mut().enumerate() {
        *v = bounds.clamp(i % dim, *v);
    }
}

/// `u_σ = Σ u_{n,K} χ_n χ_K` as a space-time field. Points on shared cell
/// faces take the value of the first containing cell; `t ∈ (t_{n−1}, t_n]`
/// maps to interval `n` and `t ≤ 0` to the first interval.
pub struct EmbeddedControl {
    control: Control,
}

pub fn embed_control(u: &Control) -> EmbeddedControl {
    EmbeddedControl { control: u.clone() }
}

impl VectorField for EmbeddedControl {
    fn value(&self, x: &Point, t: f64) -> Vec3 {
        let c = &self.control;
        let n = c.grid.interval_of(t).max(1);
        let mut out = [0.0; 3];
        if let Some(k) = c.mesh.locate(x) {
            for (j, o) in out.iter_mut().enumerate().take(c.dim()) {
                *o = c.value(n, k, j);
            }
        }
        out
    }

    fn gradient(&self, _x: &Point, _t: f64) -> Option<Mat3> {
        Some([[0.0; 3]; 3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxDomain;

    fn setup() -> (TimeGrid, Arc<Mesh>) {
        let mesh = Arc::new(Mesh::build_structured(&BoxDomain::unit(2), 2).unwrap());
        (TimeGrid::uniform(1.0, 3).unwrap(), mesh)
    }

    #[test]
    fn projection_clamps_and_is_idempotent() {
        let (g, m) = setup();
        let b = BoxBounds::uniform(2, -1.0, 1.0).unwrap();
        let mut vals: Vec<f64> = (0..3 * 8 * 2).map(|i| i as f64 * 0.1 - 2.0).collect();
        vals[0] = 5.0;
        vals[1] = 0.25;
        assert!(Control::new(g.clone(), m.clone(), b.clone(), vals.clone()).is_err());
        let u = Control::project(g, m, b.clone(), vals).unwrap();
        assert_eq!(u.values()[0], 1.0);
        assert_eq!(u.values()[1], 0.25);
        let mut again = u.values().to_vec();
        project_box(&mut again, &b);
        assert_eq!(again, u.values());
        assert!(u.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn wrong_length_or_dimension_rejected() {
        let (g, m) = setup();
        let b = BoxBounds::uniform(2, -1.0, 1.0).unwrap();
        assert!(Control::new(g.clone(), m.clone(), b, vec![0.0; 5]).is_err());
        let b3 = BoxBounds::uniform(3, -1.0, 1.0).unwrap();
        assert!(Control::zeros(g, m, b3).is_err());
    }

    #[test]
    fn embedding_reproduces_values_and_integrals() {
        let (g, m) = setup();
        let b = BoxBounds::unbounded(2);
        let vals: Vec<f64> = (0..48).map(|i| (i as f64 * 0.37).sin()).collect();
        let u = Control::new(g.clone(), m.clone(), b.clone(), vals).unwrap();
        let e = embed_control(&u);
        for n in 1..=3 {
            let t = 0.5 * (g.t(n - 1) + g.t(n));
            for k in 0..m.n_cells() {
                let v = e.value(&m.centroid(k), t);
                assert_eq!(v[0], u.value(n, k, 0));
                assert_eq!(v[1], u.value(n, k, 1));
            }
        }
        let c = Control::constant(g, m, b, &[2.0, -3.0]).unwrap();
        let ec = embed_control(&c);
        assert_eq!(ec.value(&[0.3, 0.9, 0.0], 0.0), [2.0, -3.0, 0.0]);
        let total = c.integral();
        assert!((total[0] - 2.0).abs() < 1e-14 && (total[1] + 3.0).abs() < 1e-14);
        let norm = c.l2_norm();
        assert!((norm - 13f64.sqrt()).abs() < 1e-13);
    }
}
