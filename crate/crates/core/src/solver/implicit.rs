use crate::error::{Error, Result};

use super::config::{FixedPointInit, SolverConfig};

#[derive(Debug)]
pub(crate) struct StepOutcome {
    pub y: f64,
    pub residual: f64,
    pub iterations: usize,
    pub damped: bool,
}

/// Solve `y = avg + f(y) dt` by fixed point, relaxing when the residual stops shrinking.
pub(crate) fn implicit_step(
    avg: f64,
    dt: f64,
    f: impl Fn(f64) -> f64,
    cfg: &SolverConfig,
    time_index: usize,
    node: usize,
) -> Result<StepOutcome> {
    let mut y = match cfg.init {
        FixedPointInit::Average => avg,
        FixedPointInit::Shifted(s) => avg + s,
    };
    let mut theta = 1.0;
    let mut prev = f64::INFINITY;
    let mut damped = false;
    for it in 1..=cfg.max_iterations {
        let target = avg + f(y) * dt;
        if !target.is_finite() {
            return Err(Error::NonFinite { time_index, node });
        }
        let r = target - y;
        if r.abs() > prev && theta > 1.0 / 1024.0 {
            theta *= cfg.damping;
            damped = true;
        }
        prev = r.abs();
        let next = y + theta * r;
        let done = (theta * r).abs() <= cfg.tolerance * next.abs().max(1.0);
        y = next;
        if done {
            let residual = (avg + f(y) * dt - y).abs();
            if !residual.is_finite() {
                return Err(Error::NonFinite { time_index, node });
            }
            return Ok(StepOutcome { y, residual, iterations: it, damped });
        }
    }
    let residual = (avg + f(y) * dt - y).abs();
    Err(Error::NonConvergence { time_index, node, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_linear_equation() {
        // y = 1 + 0.5 y dt with dt = 0.1 has y = 1 / 0.95.
        let out = implicit_step(1.0, 0.1, |y| 0.5 * y, &SolverConfig::default(), 0, 0).unwrap();
        assert!((out.y - 1.0 / 0.95).abs() < 1e-13);
        assert!(out.residual < 1e-12);
    }

    #[test]
    fn damping_rescues_oscillation() {
        // Slope -1.5 in the update map: plain iteration diverges, relaxation converges.
        let out = implicit_step(1.0, 1.0, |y| -1.5 * y, &SolverConfig::default(), 0, 0).unwrap();
        assert!((out.y - 0.4).abs() < 1e-11);
        assert!(out.damped);
    }

    #[test]
    fn reports_nonconvergence() {
        let cfg = SolverConfig { max_iterations: 3, ..Default::default() };
        let err = implicit_step(1.0, 0.9, |y| y, &cfg, 4, 2).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { time_index: 4, node: 2, .. }));
    }
}
