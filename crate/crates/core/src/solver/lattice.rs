use rayon::prelude::*;

use crate::driver::{DriverSpec, Family};
use crate::error::{Error, Result};
use crate::field::{SolutionField, SolverMeta, SupportKind};
use crate::lattice::{Lattice, Window};
use crate::terminal::TerminalCondition;

use super::config::SolverConfig;
use super::implicit::implicit_step;

/// How the volatility is read off two successor values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMode {
    /// `z = (y↑ − y↓) / (2√Δt)`.
    Difference,
    /// For log-values: `z = sgn(d) √(2 ln cosh d) / √Δt` with `d = (y↑ − y↓)/2`,
    /// so that `½ z² Δt` is exactly the one-step Jensen gap of the exponential.
    LogDomain,
}

/// `ln cosh d` without cancellation for small `|d|` or overflow for large `|d|`.
pub fn ln_cosh(d: f64) -> f64 {
    let a = d.abs();
    if a < 20.0 {
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
    }
}

pub(crate) fn extract_z(up: f64, down: f64, sqrt_dt: f64, mode: ZMode) -> f64 {
    match mode {
        ZMode::Difference => (up - down) / (2.0 * sqrt_dt),
        ZMode::LogDomain => {
            let d = 0.5 * (up - down);
            d.signum() * (2.0 * ln_cosh(d)).sqrt() / sqrt_dt
        }
    }
}

const PAR_WIDTH: usize = 512;

/// Backward induction over `window` from the given terminal slice.
pub fn induct(
    lattice: &Lattice,
    window: Window,
    terminal: Vec<f64>,
    f: &(dyn Fn(f64, f64, &[f64]) -> f64 + Sync),
    mode: ZMode,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    cfg.validate()?;
    if window.terminal_level > lattice.steps()
        || window.root_level > window.terminal_level
        || window.root_j > window.root_level
    {
        return Err(Error::InvalidConfig(format!("window {window:?} does not fit the lattice")));
    }
    if terminal.len() != window.width(window.terminal_level) {
        return Err(Error::InvalidConfig(format!(
            "terminal slice has {} values, window needs {}",
            terminal.len(),
            window.width(window.terminal_level)
        )));
    }
    if let Some(k) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time_index: window.terminal_level, node: window.root_j + k });
    }
    let levels = window.levels();
    let mut y: Vec<Vec<f64>> = vec![Vec::new(); levels];
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); levels - 1];
    y[levels - 1] = terminal;
    let (dt, h) = (lattice.dt(), lattice.sqrt_dt());
    let mut meta = SolverMeta { method: "lattice".into(), ..Default::default() };
    for l in (0..levels - 1).rev() {
        let level = window.root_level + l;
        let t = lattice.time(level);
        let next = &y[l + 1];
        let node = |k: usize| -> Result<(f64, f64, f64, usize, bool)> {
            let (down, up) = (next[k], next[k + 1]);
            let avg = 0.5 * (up + down);
            let zk = extract_z(up, down, h, mode);
            let zs = [zk];
            let out = implicit_step(avg, dt, |yy| f(t, yy, &zs), cfg, level, window.root_j + k)?;
            Ok((out.y, zk, out.residual, out.iterations, out.damped))
        };
        let width = window.width(level);
        let results: Vec<Result<_>> = if width >= PAR_WIDTH {
            (0..width).into_par_iter().map(node).collect()
        } else {
            (0..width).map(node).collect()
        };
        let mut yl = Vec::with_capacity(width);
        let mut zl = Vec::with_capacity(width);
        for r in results {
            let (yy, zz, res, it, damped) = r?;
            yl.push(yy);
            zl.push(zz);
            meta.max_residual = meta.max_residual.max(res);
            meta.max_iterations_used = meta.max_iterations_used.max(it);
            meta.damped_nodes += damped as usize;
        }
        y[l] = yl;
        z[l] = zl;
    }
    let time_indices: Vec<usize> = (window.root_level..=window.terminal_level).collect();
    let times = time_indices.iter().map(|&i| lattice.time(i)).collect();
    let states = time_indices
        .iter()
        .map(|&i| (0..window.width(i)).map(|k| lattice.state(i, window.root_j + k)).collect())
        .collect();
    Ok(SolutionField {
        support: SupportKind::Lattice { window },
        dim: 1,
        time_indices,
        times,
        states,
        y,
        z,
        positive: false,
        meta,
    })
}

/// Backward induction for an ordinary (or log-quadratic) BSDE on the lattice.
pub fn solve_lattice(lattice: &Lattice, x: &TerminalCondition, f: &DriverSpec, cfg: &SolverConfig) -> Result<SolutionField> {
    match f.family {
        Family::Ordinary | Family::LnQ => {}
        other => {
            return Err(Error::FamilyMismatch { expected: "ordinary or lnq".into(), found: other.to_string() });
        }
    }
    let terminal = lattice.terminal_values(x);
    if f.family == Family::LnQ {
        if let Some(k) = terminal.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveTerminal { value: terminal[k], state: vec![lattice.state(lattice.steps(), k)] });
        }
    }
    let g = f.f.clone();
    let mut field = induct(lattice, lattice.full_window(), terminal, &|t, y, z| g(t, y, z), ZMode::Difference, cfg)?;
    field.meta.lineage = f.lineage_names();
    field.positive = field.y.iter().flatten().all(|v| *v > 0.0);
    Ok(field)
}

/// One-step residuals `|y − avg − f(t, y, z) Δt|` of a lattice field under `mode`.
pub fn lattice_residuals(
    lattice: &Lattice,
    field: &SolutionField,
    f: &(dyn Fn(f64, f64, &[f64]) -> f64 + Sync),
    mode: ZMode,
) -> Vec<Vec<f64>> {
    let (dt, h) = (lattice.dt(), lattice.sqrt_dt());
    (0..field.levels() - 1)
        .map(|l| {
            let t = field.times[l];
            (0..field.y[l].len())
                .map(|k| {
                    let (down, up) = (field.y[l + 1][k], field.y[l + 1][k + 1]);
                    let z = extract_z(up, down, h, mode);
                    (field.y[l][k] - 0.5 * (up + down) - f(t, field.y[l][k], &[z]) * dt).abs()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientBundle;
    use crate::solver::config::FixedPointInit;

    fn ordinary(f: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static) -> DriverSpec {
        DriverSpec::new("test", Family::Ordinary, f, CoefficientBundle::zero(1.0))
    }

    #[test]
    fn ln_cosh_is_accurate_across_scales() {
        let series = |d: f64| {
            let d2 = d * d;
            d2 * (0.5 + d2 * (-1.0 / 12.0 + d2 * (1.0 / 45.0 + d2 * (-17.0 / 2520.0 + d2 * 31.0 / 14175.0))))
        };
        for d in [1e-9_f64, 1e-4, 0.01] {
            assert!((ln_cosh(d) - series(d)).abs() <= 1e-15 * series(d), "{d}");
        }
        for d in [0.3_f64, 2.0, 19.9] {
            let r = d.cosh().ln();
            assert!((ln_cosh(d) - r).abs() <= 1e-14 * r, "{d}");
        }
        for d in [20.1_f64, 300.0] {
            assert!((ln_cosh(d) - (d - 2f64.ln())).abs() <= 1e-14 * d, "{d}");
        }
        assert_eq!(ln_cosh(-0.7), ln_cosh(0.7));
    }

    #[test]
    fn zero_driver_is_conditional_expectation() {
        let l = Lattice::uniform(1.0, 64).unwrap();
        let x = TerminalCondition::exp_w(1.0);
        let field = solve_lattice(&l, &x, &ordinary(|_, _, _| 0.0), &SolverConfig::default()).unwrap();
        let ce = l.conditional_expectation(&l.terminal_values(&x));
        assert_eq!(field.max_abs_diff_y(&SolutionField { y: ce, ..field.clone() }).unwrap(), 0.0);
    }

    #[test]
    fn linear_driver_has_discrete_closed_form() {
        // f = r y: each step divides by (1 − rΔt).
        let (r, n) = (0.3, 50);
        let l = Lattice::uniform(1.0, n).unwrap();
        let field = solve_lattice(&l, &TerminalCondition::constant(2.0), &ordinary(move |_, y, _| r * y), &SolverConfig::default()).unwrap();
        let expect = 2.0 / (1.0 - r / n as f64).powi(n as i32);
        assert!((field.y0() - expect).abs() < 1e-11);
    }

    #[test]
    fn residuals_are_within_tolerance() {
        let l = Lattice::uniform(1.0, 32).unwrap();
        let f = |_: f64, y: f64, z: &[f64]| 0.2 * y.sin() + 0.5 * z[0] * z[0];
        let x = TerminalCondition::new(|w| w[0].sin(), crate::terminal::Positivity::Unrestricted, "sin W");
        let field = solve_lattice(&l, &x, &ordinary(f), &SolverConfig::default()).unwrap();
        let res = lattice_residuals(&l, &field, &f, ZMode::Difference);
        let worst = res.iter().flatten().fold(0.0_f64, |a, b| a.max(*b));
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn distinct_initializations_agree() {
        let l = Lattice::uniform(1.0, 40).unwrap();
        let f = ordinary(|_, y: f64, z: &[f64]| (1.0 + y.exp()).ln() + 0.5 * z[0].abs());
        let x = TerminalCondition::exp_w(0.7);
        let a = solve_lattice(&l, &x, &f, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig { init: FixedPointInit::Shifted(3.0), ..Default::default() };
        let b = solve_lattice(&l, &x, &f, &cfg).unwrap();
        let scale = a.y.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
        assert!(a.max_abs_diff_y(&b).unwrap() <= 10.0 * 1e-12 * scale);
    }

    #[test]
    fn geometric_family_is_rejected() {
        let l = Lattice::uniform(1.0, 4).unwrap();
        let d = DriverSpec::new("g", Family::Geometric, |_, _, _| 0.0, CoefficientBundle::zero(1.0));
        assert!(matches!(
            solve_lattice(&l, &TerminalCondition::constant(1.0), &d, &SolverConfig::default()),
            Err(Error::FamilyMismatch { .. })
        ));
    }

    #[test]
    fn lnq_rejects_nonpositive_terminal() {
        let l = Lattice::uniform(1.0, 4).unwrap();
        let d = DriverSpec::new("g", Family::LnQ, |_, _, _| 0.0, CoefficientBundle::zero(1.0));
        let x = TerminalCondition::new(|w| w[0], crate::terminal::Positivity::Unrestricted, "w");
        assert!(matches!(solve_lattice(&l, &x, &d, &SolverConfig::default()), Err(Error::NonPositiveTerminal { .. })));
    }
}
