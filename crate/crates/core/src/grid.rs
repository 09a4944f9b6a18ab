use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time nodes `0 = t_0 < ... < t_N = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("at least one step is required".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first node must be 0, got {}", nodes[0])));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "nodes must be strictly increasing and finite (index {})",
                    i + 1
                )));
            }
        }
        Ok(Self { nodes })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be >= 1".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        let mut nodes: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        nodes[steps] = horizon;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Length of step `i`, from `t_i` to `t_{i+1}`.
    pub fn dt(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.horizon() / self.steps() as f64;
        (0..self.steps()).all(|i| (self.dt(i) - h).abs() <= 1e-12 * h)
    }
}
