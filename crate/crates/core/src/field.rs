//! Analytic space-time fields consumed through quadrature-point callbacks.

use std::sync::Arc;

use crate::mesh::Point;

pub type Vec3 = [f64; 3];
/// Gradient matrix, `g[j][i] = ∂_i y_j`.
pub type Mat3 = [[f64; 3]; 3];

/// Vector field `y(x, t)`; the gradient is optional but required wherever an
/// `H¹` pairing with the field is formed (projections, error norms).
pub trait VectorField: Send + Sync {
    fn value(&self, x: &Point, t: f64) -> Vec3;

    fn gradient(&self, _x: &Point, _t: f64) -> Option<Mat3> {
        None
    }
}

pub trait ScalarField: Send + Sync {
    fn value(&self, x: &Point, t: f64) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(&Point, f64) -> f64 + Send + Sync,
{
    fn value(&self, x: &Point, t: f64) -> f64 {
        self(x, t)
    }
}

pub type SharedField = Arc<dyn VectorField>;

/// Identically zero field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn value(&self, _x: &Point, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    fn gradient(&self, _x: &Point, _t: f64) -> Option<Mat3> {
        Some([[0.0; 3]; 3])
    }
}

/// Field given by closures for the value and (optionally) the gradient.
pub struct FnField<F, G = fn(&Point, f64) -> Mat3> {
    value: F,
    gradient: Option<G>,
}

impl<F> FnField<F>
where
    F: Fn(&Point, f64) -> Vec3 + Send + Sync,
{
    pub fn new(value: F) -> Self {
        Self {
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(&Point, f64) -> Vec3 + Send + Sync,
    G: Fn(&Point, f64) -> Mat3 + Send + Sync,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        Self {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> VectorField for FnField<F, G>
where
    F: Fn(&Point, f64) -> Vec3 + Send + Sync,
    G: Fn(&Point, f64) -> Mat3 + Send + Sync,
{
    fn value(&self, x: &Point, t: f64) -> Vec3 {
        (self.value)(x, t)
    }

    fn gradient(&self, x: &Point, t: f64) -> Option<Mat3> {
        self.gradient.as_ref().map(|g| g(x, t))
    }
}

/// Spatially constant field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub Vec3);

impl VectorField for ConstantField {
    fn value(&self, _x: &Point, _t: f64) -> Vec3 {
        self.0
    }

    fn gradient(&self, _x: &Point, _t: f64) -> Option<Mat3> {
        Some([[0.0; 3]; 3])
    }
}

/// `scale * field`.
pub struct ScaledField {
    pub scale: f64,
    pub field: SharedField,
}

impl VectorField for ScaledField {
    fn value(&self, x: &Point, t: f64) -> Vec3 {
        self.field.value(x, t).map(|v| self.scale * v)
    }

    fn gradient(&self, x: &Point, t: f64) -> Option<Mat3> {
        self.field
            .gradient(x, t)
            .map(|g| g.map(|r| r.map(|v| self.scale * v)))
    }
}

/// The field frozen at a fixed time.
pub struct AtTime {
    pub time: f64,
    pub field: SharedField,
}

impl VectorField for AtTime {
    fn value(&self, x: &Point, _t: f64) -> Vec3 {
        self.field.value(x, self.time)
    }

    fn gradient(&self, x: &Point, _t: f64) -> Option<Mat3> {
        self.field.gradient(x, self.time)
    }
}
