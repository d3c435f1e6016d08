//! Time partitions `0 = t_0 < t_1 < … < t_N = T`.

use crate::error::{Error, Result};

/// Default quasi-uniformity constant: `max τ_n < ρ₀ τ_n` for every `n`.
pub const DEFAULT_RHO0: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    rho0: f64,
}

impl TimeGrid {
    /// `n` equal steps on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("final time must be positive, got {t_end}")));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        nodes[n] = t_end;
        Self::from_nodes(nodes, DEFAULT_RHO0)
    }

    pub fn from_nodes(nodes: Vec<f64>, rho0: f64) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0 and have a step"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time nodes must be strictly increasing"));
        }
        let grid = Self { nodes, rho0 };
        let tau = grid.tau_max();
        if let Some(n) = (1..=grid.n_steps()).find(|&n| !(tau < rho0 * grid.tau(n))) {
            return Err(Error::invalid(format!(
                "step {n} violates quasi-uniformity: max step {tau} >= {rho0} * {}",
                grid.tau(n)
            )));
        }
        Ok(grid)
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `t_n`, `0 ≤ n ≤ N`.
    pub fn t(&self, n: usize) -> f64 {
        self.nodes[n]
    }

    /// `τ_n = t_n − t_{n−1}`, `1 ≤ n ≤ N`.
    pub fn tau(&self, n: usize) -> f64 {
        self.nodes[n] - self.nodes[n - 1]
    }

    pub fn tau_max(&self) -> f64 {
        (1..=self.n_steps()).map(|n| self.tau(n)).fold(0.0, f64::max)
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.n_steps()]
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    /// Index `n` with `t ∈ (t_{n−1}, t_n]`; `0` for `t ≤ 0`, `N` for `t ≥ T`.
    pub fn interval_of(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let n = self.nodes.partition_point(|&s| s < t);
        n.min(self.n_steps())
    }
}
