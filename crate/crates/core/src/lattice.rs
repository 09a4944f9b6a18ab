use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::terminal::TerminalCondition;

/// Recombining symmetric binomial lattice for one-dimensional Brownian motion:
/// node `(i, j)` sits at `w = (2j − i)√Δt`, each branch with probability ½.
#[derive(Clone, Debug)]
pub struct Lattice {
    grid: TimeGrid,
    dt: f64,
    sqrt_dt: f64,
}

/// A sub-lattice rooted at node `(root_level, root_j)` and cut at `terminal_level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub root_level: usize,
    pub root_j: usize,
    pub terminal_level: usize,
}

impl Window {
    pub fn width(&self, level: usize) -> usize {
        level - self.root_level + 1
    }

    pub fn levels(&self) -> usize {
        self.terminal_level - self.root_level + 1
    }
}

impl Lattice {
    pub fn new(grid: TimeGrid) -> Result<Self> {
        if !grid.is_uniform() {
            return Err(Error::InvalidGrid("the binomial lattice needs a uniform grid".into()));
        }
        let dt = grid.horizon() / grid.steps() as f64;
        Ok(Self { grid, dt, sqrt_dt: dt.sqrt() })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::new(TimeGrid::uniform(horizon, steps)?)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sqrt_dt(&self) -> f64 {
        self.sqrt_dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.grid.time(i)
    }

    pub fn state(&self, i: usize, j: usize) -> f64 {
        (2.0 * j as f64 - i as f64) * self.sqrt_dt
    }

    pub fn level_states(&self, i: usize) -> Vec<f64> {
        (0..=i).map(|j| self.state(i, j)).collect()
    }

    pub fn full_window(&self) -> Window {
        Window { root_level: 0, root_j: 0, terminal_level: self.steps() }
    }

    /// Payoff evaluated at the nodes of `level` inside `window`.
    pub fn payoff_values(&self, x: &TerminalCondition, window: Window, level: usize) -> Vec<f64> {
        (0..window.width(level)).map(|k| x.eval(&[self.state(level, window.root_j + k)])).collect()
    }

    pub fn terminal_values(&self, x: &TerminalCondition) -> Vec<f64> {
        self.payoff_values(x, self.full_window(), self.steps())
    }

    /// Binomial probabilities of the nodes at level `i`.
    pub fn weights(&self, i: usize) -> Vec<f64> {
        let mut logw = Vec::with_capacity(i + 1);
        let mut lc = 0.0_f64;
        for j in 0..=i {
            if j > 0 {
                lc += ((i - j + 1) as f64).ln() - (j as f64).ln();
            }
            logw.push(lc - i as f64 * std::f64::consts::LN_2);
        }
        logw.into_iter().map(f64::exp).collect()
    }

    /// Discrete conditional expectation by repeated averaging.
    pub fn conditional_expectation(&self, terminal: &[f64]) -> Vec<Vec<f64>> {
        let n = self.steps();
        assert_eq!(terminal.len(), n + 1, "terminal slice width");
        let mut levels = vec![Vec::new(); n + 1];
        levels[n] = terminal.to_vec();
        for i in (0..n).rev() {
            levels[i] = (0..=i).map(|j| 0.5 * (levels[i + 1][j] + levels[i + 1][j + 1])).collect();
        }
        levels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let l = Lattice::uniform(1.0, 200).unwrap();
        let s: f64 = l.weights(200).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(l.weights(2), vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn averaging_matches_weighted_sum() {
        let l = Lattice::uniform(1.0, 40).unwrap();
        let x = TerminalCondition::exp_w(1.0);
        let term = l.terminal_values(&x);
        let ce = l.conditional_expectation(&term);
        let direct: f64 = l.weights(40).iter().zip(&term).map(|(w, v)| w * v).sum();
        assert!((ce[0][0] - direct).abs() < 1e-13 * direct);
        // E[e^{W_T}] on the lattice is cosh(√Δt)^N.
        let closed = (1.0f64 / 40.0).sqrt().cosh().powi(40);
        assert!((ce[0][0] - closed).abs() < 1e-13 * closed);
    }

    #[test]
    fn nonuniform_grid_is_rejected() {
        assert!(Lattice::new(TimeGrid::new(vec![0.0, 0.3, 1.0]).unwrap()).is_err());
    }
}
