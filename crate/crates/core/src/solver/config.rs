use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lattice,
    Lsmc,
}

/// Starting point of the implicit fixed point at each node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointInit {
    /// Start from the conditional average of the next level.
    Average,
    /// Start from the average plus a constant offset.
    Shifted(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Total polynomial degree of the regression basis.
    pub basis_degree: usize,
    /// Lower floor applied to terminal values before taking logs.
    pub positivity_floor: f64,
    /// Relaxation factor applied when the fixed point stops contracting.
    pub damping: f64,
    pub init: FixedPointInit,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Lattice,
            tolerance: 1e-12,
            max_iterations: 200,
            basis_degree: 4,
            positivity_floor: 1e-12,
            damping: 0.5,
            init: FixedPointInit::Average,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if !(self.positivity_floor > 0.0) {
            return Err(Error::InvalidConfig("positivity_floor must be positive".into()));
        }
        Ok(())
    }
}
