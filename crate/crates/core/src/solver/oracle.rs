use crate::error::{Error, Result};
use crate::field::{SolutionField, SolverMeta, SupportKind};
use crate::lattice::Lattice;
use crate::terminal::TerminalCondition;

/// Robust γ-norm by dynamic programming over drift-tilted branch probabilities:
/// `U = X^γ`, `U(i, j) = max_μ p_μ U(i+1, j+1) + (1 − p_μ) U(i+1, j)` with
/// `p_μ = (1 + μ√Δt)/2` and `μ` on a uniform grid of `[−C, C]`; `Y = U^{1/γ}`.
pub fn robust_oracle(lattice: &Lattice, x: &TerminalCondition, gamma: f64, c: f64, drift_grid: usize) -> Result<SolutionField> {
    robust_oracle_controls(lattice, x, gamma, c, drift_grid).map(|(f, _)| f)
}

/// [`robust_oracle`] together with the maximizing drift at every non-terminal node.
pub fn robust_oracle_controls(
    lattice: &Lattice,
    x: &TerminalCondition,
    gamma: f64,
    c: f64,
    drift_grid: usize,
) -> Result<(SolutionField, Vec<Vec<f64>>)> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidConfig(format!("ambiguity bound must be non-negative, got {c}")));
    }
    let h = lattice.sqrt_dt();
    if !(c * h < 1.0) {
        return Err(Error::InvalidConfig(format!("C sqrt(dt) = {} must be < 1 for valid probabilities", c * h)));
    }
    let mus: Vec<f64> = if c == 0.0 || drift_grid <= 1 {
        if c > 0.0 {
            return Err(Error::InvalidConfig("drift grid needs at least two points when C > 0".into()));
        }
        vec![0.0]
    } else {
        (0..drift_grid).map(|k| -c + 2.0 * c * k as f64 / (drift_grid - 1) as f64).collect()
    };
    let n = lattice.steps();
    let terminal = lattice.terminal_values(x);
    if let Some(j) = terminal.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveTerminal { value: terminal[j], state: vec![lattice.state(n, j)] });
    }
    let mut u = vec![Vec::new(); n + 1];
    let mut controls = vec![Vec::new(); n];
    u[n] = terminal.iter().map(|v| v.powf(gamma)).collect();
    for i in (0..n).rev() {
        let mut ui = Vec::with_capacity(i + 1);
        let mut ci = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let (down, up) = (u[i + 1][j], u[i + 1][j + 1]);
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &mu in &mus {
                let p = 0.5 * (1.0 + mu * h);
                let v = p * up + (1.0 - p) * down;
                if v > best.0 {
                    best = (v, mu);
                }
            }
            ui.push(best.0);
            ci.push(best.1);
        }
        u[i] = ui;
        controls[i] = ci;
    }
    let y: Vec<Vec<f64>> = u.iter().map(|l| l.iter().map(|v| v.powf(1.0 / gamma)).collect()).collect();
    let z: Vec<Vec<f64>> = (0..n).map(|i| (0..=i).map(|j| (y[i + 1][j + 1] - y[i + 1][j]) / (2.0 * h)).collect()).collect();
    let field = SolutionField {
        support: SupportKind::Lattice { window: lattice.full_window() },
        dim: 1,
        time_indices: (0..=n).collect(),
        times: lattice.grid().nodes().to_vec(),
        states: (0..=n).map(|i| lattice.level_states(i)).collect(),
        y,
        z,
        positive: true,
        meta: SolverMeta { method: "robust_oracle".into(), ..Default::default() },
    };
    Ok((field, controls))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ambiguity_is_lattice_gamma_norm() {
        let l = Lattice::uniform(1.0, 50).unwrap();
        let x = TerminalCondition::exp_w(1.0);
        let f = robust_oracle(&l, &x, 2.0, 0.0, 1).unwrap();
        let ce = l.conditional_expectation(&l.terminal_values(&x).iter().map(|v| v * v).collect::<Vec<_>>());
        for (a, b) in f.y.iter().flatten().zip(ce.iter().flatten()) {
            assert!((a - b.sqrt()).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn optimal_drift_is_an_endpoint() {
        let l = Lattice::uniform(1.0, 40).unwrap();
        let x = TerminalCondition::exp_w(0.8);
        let (fine, ctrl) = robust_oracle_controls(&l, &x, 2.0, 0.5, 101).unwrap();
        let (coarse, _) = robust_oracle_controls(&l, &x, 2.0, 0.5, 2).unwrap();
        assert!(fine.max_abs_diff_y(&coarse).unwrap() <= 1e-12 * fine.y0());
        assert!(ctrl.iter().flatten().all(|m| m.abs() == 0.5));
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let l = Lattice::uniform(1.0, 4).unwrap();
        assert!(robust_oracle(&l, &TerminalCondition::exp_w(1.0), 2.0, 2.5, 3).is_err());
    }
}
