//! Shared fixtures for the criterion benchmarks.

use gbsde::{Lattice, TerminalCondition};

/// One-dimensional lattice on `[0, 1]`.
pub fn unit_lattice(steps: usize) -> Lattice {
    Lattice::uniform(1.0, steps).expect("valid lattice")
}

/// `X = exp(W_T)`.
pub fn exp_payoff() -> TerminalCondition {
    TerminalCondition::exp_w(1.0)
}
