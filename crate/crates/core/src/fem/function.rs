use std::sync::Arc;

use super::space::{CellEval, MixedSpace};
use crate::error::{Error, Result};
use crate::field::{Mat3, Vec3, VectorField};
use crate::sparse::dot;

/// Discrete velocity/pressure pair on a [`MixedSpace`].
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<MixedSpace>,
    pub velocity: Vec<f64>,
    pub pressure: Option<Vec<f64>>,
}

impl FeFunction {
    pub fn zero(space: &Arc<MixedSpace>) -> Self {
        Self {
            velocity: vec![0.0; space.n_vel()],
            pressure: None,
            space: space.clone(),
        }
    }

    pub fn from_velocity(space: &Arc<MixedSpace>, velocity: Vec<f64>) -> Result<Self> {
        if velocity.len() != space.n_vel() {
            return Err(Error::invalid(format!(
                "velocity has {} coefficients, space expects {}",
                velocity.len(),
                space.n_vel()
            )));
        }
        Ok(Self {
            space: space.clone(),
            velocity,
            pressure: None,
        })
    }

    pub fn with_pressure(mut self, pressure: Vec<f64>) -> Result<Self> {
        if pressure.len() != self.space.n_pre() {
            return Err(Error::invalid("pressure length does not match the space"));
        }
        self.pressure = Some(pressure);
        Ok(self)
    }

    /// Nodal P2 interpolant of a field at time `t` (boundary values kept).
    pub fn interpolate(space: &Arc<MixedSpace>, field: &dyn VectorField, t: f64) -> Self {
        let dim = space.dim();
        let mut velocity = vec![0.0; space.n_vel()];
        for (a, x) in space.node_coords().iter().enumerate() {
            let v = field.value(x, t);
            velocity[a * dim..(a + 1) * dim].copy_from_slice(&v[..dim]);
        }
        Self {
            space: space.clone(),
            velocity,
            pressure: None,
        }
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    pub fn check_same_space(&self, other: &FeFunction) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// True when all Dirichlet coefficients vanish (membership in `Z_h`).
    pub fn satisfies_dirichlet(&self) -> bool {
        self.velocity
            .iter()
            .zip(self.space.dirichlet())
            .all(|(v, &d)| !d || *v == 0.0)
    }

    /// Integral of the pressure component, if present.
    pub fn pressure_integral(&self) -> Option<f64> {
        self.pressure
            .as_ref()
            .map(|p| dot(p, self.space.mean_vector()))
    }
}

/// Values and gradients of the velocity `coeffs` at every point of `ce`.
pub(crate) fn velocity_at(
    space: &MixedSpace,
    k: usize,
    coeffs: &[f64],
    ce: &CellEval,
    values: &mut Vec<Vec3>,
    grads: &mut Vec<Mat3>,
) {
    let dim = space.dim();
    let nodes = space.cell_nodes(k);
    values.clear();
    grads.clear();
    for q in 0..ce.nq {
        let mut v = [0.0; 3];
        let mut g = [[0.0; 3]; 3];
        for (i, &a) in nodes.iter().enumerate() {
            let phi = ce.phi(q, i);
            let dphi = ce.dphi(q, i);
            for j in 0..dim {
                let c = coeffs[a * dim + j];
                v[j] += c * phi;
                for d in 0..dim {
                    g[j][d] += c * dphi[d];
                }
            }
        }
        values.push(v);
        grads.push(g);
    }
}
