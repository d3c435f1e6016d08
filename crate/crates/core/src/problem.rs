//! Physical and cost parameters of the tracking problem.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{SharedField, ZeroField};

/// Componentwise control bounds `α_j ≤ u_j ≤ β_j`; infinite bounds allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("bounds need one lower and one upper value per component"));
        }
        for (j, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::invalid(format!(
                    "infeasible box for component {j}: lower {a} > upper {b}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, j: usize, v: f64) -> f64 {
        v.max(self.lower[j]).min(self.upper[j])
    }

    pub fn contains(&self, j: usize, v: f64) -> bool {
        self.lower[j] <= v && v <= self.upper[j]
    }
}

/// Data of the discrete tracking problem: viscosity `nu`, Voigt length
/// `alpha`, control cost `gamma`, weights `alpha_t` (terminal) and `alpha_q`
/// (distributed), horizon `t_end`, bounds, initial state and targets.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_t: f64,
    pub alpha_q: f64,
    pub t_end: f64,
    pub bounds: BoxBounds,
    pub y0: SharedField,
    pub y_target: SharedField,
    pub y_q: SharedField,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("alpha_t", &self.alpha_t)
            .field("alpha_q", &self.alpha_q)
            .field("t_end", &self.t_end)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Parameters with zero initial state and zero targets.
    pub fn new(
        nu: f64,
        alpha: f64,
        gamma: f64,
        alpha_t: f64,
        alpha_q: f64,
        t_end: f64,
        bounds: BoxBounds,
    ) -> Result<Self> {
        let data = Self {
            nu,
            alpha,
            gamma,
            alpha_t,
            alpha_q,
            t_end,
            bounds,
            y0: Arc::new(ZeroField),
            y_target: Arc::new(ZeroField),
            y_q: Arc::new(ZeroField),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn with_initial(mut self, y0: SharedField) -> Self {
        self.y0 = y0;
        self
    }

    pub fn with_targets(mut self, y_target: SharedField, y_q: SharedField) -> Self {
        self.y_target = y_target;
        self.y_q = y_q;
        self
    }

    /// Full check, including "at least one tracking weight positive".
    pub fn validate(&self) -> Result<()> {
        self.validate_physics()?;
        if self.alpha_t == 0.0 && self.alpha_q == 0.0 {
            return Err(Error::invalid("at least one tracking weight must be positive"));
        }
        Ok(())
    }

    /// Checks everything except the tracking-weight rule; solvers accept
    /// data with both weights zero (the adjoint then vanishes).
    pub fn validate_physics(&self) -> Result<()> {
        let finite = [self.nu, self.alpha, self.gamma, self.alpha_t, self.alpha_q, self.t_end];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("problem parameters must be finite"));
        }
        if self.nu <= 0.0 {
            return Err(Error::invalid(format!("nu must be positive, got {}", self.nu)));
        }
        if self.alpha == 0.0 {
            return Err(Error::invalid("alpha must be nonzero"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.alpha_t < 0.0 || self.alpha_q < 0.0 {
            return Err(Error::invalid("tracking weights must be non-negative"));
        }
        if self.t_end <= 0.0 {
            return Err(Error::invalid("final time must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        let b = BoxBounds::uniform(2, -1.0, 1.0).unwrap();
        assert!(ProblemData::new(0.1, 0.5, 1e-2, 1.0, 0.0, 1.0, b.clone()).is_ok());
        assert!(ProblemData::new(0.0, 0.5, 1e-2, 1.0, 0.0, 1.0, b.clone()).is_err());
        assert!(ProblemData::new(0.1, 0.0, 1e-2, 1.0, 0.0, 1.0, b.clone()).is_err());
        assert!(ProblemData::new(0.1, 0.5, 0.0, 1.0, 0.0, 1.0, b.clone()).is_err());
        assert!(ProblemData::new(0.1, 0.5, 1e-2, 0.0, 0.0, 1.0, b.clone()).is_err());
        assert!(ProblemData::new(0.1, 0.5, 1e-2, -1.0, 1.0, 1.0, b).is_err());
        assert!(BoxBounds::new(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn clamp_handles_infinite_sides() {
        let b = BoxBounds::new(vec![f64::NEG_INFINITY, 0.0], vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(b.clamp(0, -1e300), -1e300);
        assert_eq!(b.clamp(0, 5.0), 1.0);
        assert_eq!(b.clamp(1, -2.0), 0.0);
    }
}
