//! Lattice, regression and dynamic-programming solvers, plus the log-domain
//! routes for geometric, log-quadratic and two-driver equations.

pub mod config;
mod implicit;
pub mod lattice;
pub mod lsmc;
pub mod oracle;

use crate::driver::{DriverSpec, Family};
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::lattice::{Lattice, Window};
use crate::terminal::TerminalCondition;
use crate::transforms;

pub use config::{FixedPointInit, Method, SolverConfig};
pub use lattice::{induct, lattice_residuals, ln_cosh, solve_lattice, ZMode};
pub use lsmc::{lsmc_values, solve_lsmc};
pub use oracle::{robust_oracle, robust_oracle_controls};

/// Where a solve runs.
#[derive(Clone, Copy, Debug)]
pub enum Support<'a> {
    Lattice(&'a Lattice),
    Ensemble(&'a PathEnsemble),
}

/// Terminal values on the support, checked positive and floored before the log.
fn log_terminal(support: Support<'_>, x: &TerminalCondition, floor: f64) -> Result<(Vec<f64>, usize)> {
    let (values, states): (Vec<f64>, Box<dyn Fn(usize) -> Vec<f64>>) = match support {
        Support::Lattice(l) => (l.terminal_values(x), Box::new(move |j| vec![l.state(l.steps(), j)])),
        Support::Ensemble(e) => (
            (0..e.paths()).map(|m| x.eval(e.terminal(m))).collect(),
            Box::new(move |m| e.terminal(m).to_vec()),
        ),
    };
    let mut floored = 0;
    let mut out = Vec::with_capacity(values.len());
    for (k, v) in values.iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::NonPositiveTerminal { value: *v, state: states(k) });
        }
        if *v < floor {
            floored += 1;
        }
        out.push(v.max(floor).ln());
    }
    Ok((out, floored))
}

fn solve_log(
    support: Support<'_>,
    log_terminal: Vec<f64>,
    f: &DriverSpec,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    let g = f.f.clone();
    let drv = move |t: f64, y: f64, z: &[f64]| g(t, y, z);
    let mut field = match support {
        Support::Lattice(l) => induct(l, l.full_window(), log_terminal, &drv, ZMode::LogDomain, cfg)?,
        Support::Ensemble(e) => lsmc_values(e, log_terminal, &drv, cfg)?,
    };
    field.meta.lineage = f.lineage_names();
    Ok(field)
}

/// Log-domain field `(ln Y, Z̃)` of a geometric BSDE.
pub fn solve_gbsde_log(support: Support<'_>, x: &TerminalCondition, ft: &DriverSpec, cfg: &SolverConfig) -> Result<SolutionField> {
    ft.require(Family::Geometric)?;
    cfg.validate()?;
    let f = transforms::gbsde_to_ordinary(ft)?;
    let (lt, floored) = log_terminal(support, x, cfg.positivity_floor)?;
    let mut field = solve_log(support, lt, &f, cfg)?;
    field.meta.floored_terminals = floored;
    Ok(field)
}

/// Geometric BSDE `−dY/Y = f̃ dt − Z dW`, solved through its logarithm.
/// Returns `(Y, Z̃)` with `Y > 0`.
pub fn solve_gbsde(support: Support<'_>, x: &TerminalCondition, ft: &DriverSpec, cfg: &SolverConfig) -> Result<SolutionField> {
    let log = solve_gbsde_log(support, x, ft, cfg)?;
    exp_field(log)
}

/// Geometric BSDE on a lattice window from positive terminal values at the window's last level.
pub fn solve_gbsde_window(
    lattice: &Lattice,
    window: Window,
    terminal: &[f64],
    ft: &DriverSpec,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    ft.require(Family::Geometric)?;
    let f = transforms::gbsde_to_ordinary(ft)?;
    let mut lt = Vec::with_capacity(terminal.len());
    for (k, v) in terminal.iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::NonPositiveTerminal {
                value: *v,
                state: vec![lattice.state(window.terminal_level, window.root_j + k)],
            });
        }
        lt.push(v.max(cfg.positivity_floor).ln());
    }
    let g = f.f.clone();
    let log = induct(lattice, window, lt, &move |t, y, z| g(t, y, z), ZMode::LogDomain, cfg)?;
    exp_field(log)
}

fn exp_field(log: SolutionField) -> Result<SolutionField> {
    let mut out = log.map_nodes(|_, y, z| (y.exp(), z.to_vec()));
    for (i, level) in out.y.iter().enumerate() {
        if let Some(k) = level.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NonFinite { time_index: out.time_indices[i], node: k });
        }
    }
    out.positive = true;
    // Delta method: se(e^y) = e^y se(y).
    out.meta.y0_std_error = out.meta.y0_std_error.map(|s| s * out.y[0][0]);
    Ok(out)
}

/// Log-quadratic BSDE through `Y' = ln Y`, `Z' = Z/Y`. Returns `(Y, Z)` in the original variables.
pub fn solve_lnq(support: Support<'_>, x: &TerminalCondition, g: &DriverSpec, cfg: &SolverConfig) -> Result<SolutionField> {
    g.require(Family::LnQ)?;
    cfg.validate()?;
    let q = transforms::lnq_to_quadratic(g)?;
    let (lt, floored) = log_terminal(support, x, cfg.positivity_floor)?;
    let mut log = solve_log(support, lt, &q, cfg)?;
    log.meta.floored_terminals = floored;
    let mut out = log.map_nodes(|_, y, z| {
        let e = y.exp();
        (e, z.iter().map(|v| e * v).collect())
    });
    out.positive = out.y.iter().flatten().all(|v| *v > 0.0);
    out.meta.y0_std_error = out.meta.y0_std_error.map(|s| s * out.y[0][0]);
    Ok(out)
}

/// A two-driver solution in both volatility coordinates.
#[derive(Clone, Debug)]
pub struct TwoDriverSolution {
    /// `(Y, Z)` with `Z` recovered through `g₂⁻¹`.
    pub yz: SolutionField,
    /// `(Y, V)` of the reduced log-quadratic equation.
    pub yv: SolutionField,
}

/// Two-driver BSDE `Y = X + ∫g₁ − ∫g₂ dW` via its log-quadratic reduction.
pub fn solve_twodriver(support: Support<'_>, x: &TerminalCondition, spec: &DriverSpec, cfg: &SolverConfig) -> Result<TwoDriverSolution> {
    let dim = match support {
        Support::Lattice(_) => 1,
        Support::Ensemble(e) => e.dim(),
    };
    let g = transforms::twodriver_reduce(spec, dim)?;
    let yv = solve_lnq(support, x, &g, cfg)?;
    let inv = spec.volatility.as_ref().expect("reduce checked the map").g2_inv.clone();
    let mut yz = yv.map_nodes(|t, y, v| (y, inv(t, y, v)));
    yz.meta.lineage.push("g2_inverse".into());
    Ok(TwoDriverSolution { yz, yv })
}
