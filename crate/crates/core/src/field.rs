use serde::{Deserialize, Serialize};

use crate::lattice::Window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportKind {
    Lattice { window: Window },
    Ensemble { paths: usize, seed: u64 },
}

/// Solver diagnostics carried with a field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    /// Largest implicit-step residual over all nodes or paths.
    pub max_residual: f64,
    pub max_iterations_used: usize,
    /// Nodes where damping was switched on.
    pub damped_nodes: usize,
    /// Root-mean-square regression residual per step (ensemble only).
    pub regression_residuals: Vec<f64>,
    /// Standard error of `Y_0` (ensemble only).
    pub y0_std_error: Option<f64>,
    /// Terminal values raised to the positivity floor in the log route.
    pub floored_terminals: usize,
    pub lineage: Vec<String>,
}

/// `(Y, Z)` on a lattice window or an ensemble. Slice `i` holds the nodes
/// (or paths) at `times[i]`; `z` has one slice fewer than `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub support: SupportKind,
    pub dim: usize,
    pub time_indices: Vec<usize>,
    pub times: Vec<f64>,
    /// `states[i][k * dim + d]`.
    pub states: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `z[i][k * dim + d]`.
    pub z: Vec<Vec<f64>>,
    pub positive: bool,
    pub meta: SolverMeta,
}

impl SolutionField {
    pub fn y0(&self) -> f64 {
        self.y[0][0]
    }

    pub fn levels(&self) -> usize {
        self.y.len()
    }

    pub fn z_at(&self, i: usize, k: usize) -> &[f64] {
        &self.z[i][k * self.dim..(k + 1) * self.dim]
    }

    /// Apply `(y, z) -> (y', z')` at every node; the terminal slice maps `y` only.
    pub fn map_nodes(&self, mut h: impl FnMut(f64, f64, &[f64]) -> (f64, Vec<f64>)) -> SolutionField {
        let mut out = self.clone();
        for i in 0..self.levels() {
            let t = self.times[i];
            for k in 0..self.y[i].len() {
                if i < self.z.len() {
                    let (y, z) = h(t, self.y[i][k], self.z_at(i, k));
                    out.y[i][k] = y;
                    out.z[i][k * self.dim..(k + 1) * self.dim].copy_from_slice(&z);
                } else {
                    let zero = vec![0.0; self.dim];
                    out.y[i][k] = h(t, self.y[i][k], &zero).0;
                }
            }
        }
        out
    }

    /// Same support, times and node counts.
    pub fn same_discretization(&self, other: &SolutionField) -> bool {
        self.support == other.support
            && self.times == other.times
            && self.dim == other.dim
            && self.y.iter().zip(&other.y).all(|(a, b)| a.len() == b.len())
    }

    /// Largest absolute nodewise difference in `y`; `None` if shapes differ.
    pub fn max_abs_diff_y(&self, other: &SolutionField) -> Option<f64> {
        if self.y.len() != other.y.len() {
            return None;
        }
        let mut m = 0.0_f64;
        for (a, b) in self.y.iter().zip(&other.y) {
            if a.len() != b.len() {
                return None;
            }
            for (u, v) in a.iter().zip(b) {
                m = m.max((u - v).abs());
            }
        }
        Some(m)
    }
}
