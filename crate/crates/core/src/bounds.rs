//! The Bihari function `ψ`, the a priori bound it yields for log-quadratic
//! equations, and nodewise order certificates between solved fields.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::coeff::TimeFn;
use crate::error::{Error, Result};
use crate::field::{SolutionField, SolverMeta, SupportKind};
use crate::lattice::Lattice;

const LN_4: f64 = 2.0 * LN_2;

/// `ψ(x) = (x − 2)/ln 4` on `[0, 2]` and `ln ln x − ln ln 2` above; `ψ(2) = 0`.
pub fn psi(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidConfig(format!("psi needs a finite x >= 0, got {x}")));
    }
    Ok(if x <= 2.0 { (x - 2.0) / LN_4 } else { x.ln().ln() - LN_2.ln() })
}

/// Lowest value of `ψ`, attained at 0.
pub fn psi_min() -> f64 {
    -2.0 / LN_4
}

/// Exact inverse of [`psi`] on `[ψ(0), ∞)`.
pub fn psi_inv(v: f64) -> Result<f64> {
    if !(v >= psi_min()) || v.is_infinite() {
        return Err(Error::InvalidConfig(format!("psi_inv needs v >= {}, got {v}", psi_min())));
    }
    Ok(if v <= 0.0 { (2.0 + v * LN_4).max(0.0) } else { (v + LN_2.ln()).exp().exp() })
}

/// Rate to feed [`bihari_bound`] for `f̃ = β ln(1 + y)`. The product
/// `y ln(1 + y)` stays below `log₂3 · ψ̄(y)`, where `ψ̄ = 1/ψ'`, with equality at `y = 2`.
pub fn log_star_bound_rate(beta: &TimeFn) -> TimeFn {
    let k = 3f64.log2();
    match beta {
        TimeFn::Const(b) => TimeFn::Const(k * b),
        other => {
            let b = other.clone();
            TimeFn::custom(move |t| k * b.eval(t))
        }
    }
}

/// `E[ψ⁻¹(ψ(X) + ∫_t^T β ds) | F_t]` at every lattice node, from the terminal slice of `X ≥ 0`.
pub fn bihari_bound(lattice: &Lattice, x_values: &[f64], beta: &TimeFn) -> Result<SolutionField> {
    let n = lattice.steps();
    if x_values.len() != n + 1 {
        return Err(Error::InvalidConfig(format!("expected {} terminal values, got {}", n + 1, x_values.len())));
    }
    let psi_x = x_values.iter().map(|v| psi(*v)).collect::<Result<Vec<_>>>()?;
    let horizon = lattice.horizon();
    let mut y = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let tail = beta.integral(lattice.time(i), horizon);
        if !(tail >= 0.0) {
            return Err(Error::InvalidCoefficient(format!("beta integrates to {tail} on [{}, {horizon}]", lattice.time(i))));
        }
        // Binomial weights of the N − i remaining steps.
        let w = lattice.weights(n - i);
        let h = psi_x.iter().map(|p| psi_inv(p + tail)).collect::<Result<Vec<_>>>()?;
        y.push((0..=i).map(|j| w.iter().zip(&h[j..=j + n - i]).map(|(a, b)| a * b).sum()).collect::<Vec<f64>>());
    }
    Ok(SolutionField {
        support: SupportKind::Lattice { window: lattice.full_window() },
        dim: 1,
        time_indices: (0..=n).collect(),
        times: (0..=n).map(|i| lattice.time(i)).collect(),
        states: (0..=n).map(|i| lattice.level_states(i)).collect(),
        positive: y.iter().flatten().all(|v| *v > 0.0),
        y,
        z: (0..n).map(|i| vec![0.0; i + 1]).collect(),
        meta: SolverMeta { method: "bihari_bound".into(), ..Default::default() },
    })
}

/// Outcome of a nodewise order check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub passed: bool,
    /// `max (Y_low − Y_high)`; negative when `high` dominates strictly.
    pub max_gap: f64,
    pub slack: f64,
    /// `(time_index, node)` of the largest gap.
    pub witness: Option<(usize, usize)>,
    pub nodes: usize,
}

/// Certify `Y_low ≤ Y_high + slack` at every node of two fields on the same discretization.
pub fn comparison_certificate(low: &SolutionField, high: &SolutionField, slack: f64) -> Result<PropertyReport> {
    if !low.same_discretization(high) {
        return Err(Error::InvalidConfig("comparison needs fields on the same discretization".into()));
    }
    let mut max_gap = f64::NEG_INFINITY;
    let mut witness = None;
    let mut nodes = 0;
    for (i, (a, b)) in low.y.iter().zip(&high.y).enumerate() {
        for (k, (u, v)) in a.iter().zip(b).enumerate() {
            let gap = u - v;
            let gap = if gap.is_nan() { f64::INFINITY } else { gap };
            if gap > max_gap {
                max_gap = gap;
                witness = Some((low.time_indices[i], k));
            }
            nodes += 1;
        }
    }
    Ok(PropertyReport { property: "comparison".into(), passed: max_gap <= slack, max_gap, slack, witness, nodes })
}

/// Discrete BMO norm `sup_node E[Σ_{k ≥ i} |Z_k|² Δt | node]^{1/2}` of a full lattice field.
pub fn bmo_norm(field: &SolutionField, lattice: &Lattice) -> Result<f64> {
    match &field.support {
        SupportKind::Lattice { window } if *window == lattice.full_window() => {}
        _ => return Err(Error::Unsupported("BMO norm needs a full lattice field".into())),
    }
    let n = lattice.steps();
    let mut acc = vec![0.0; n + 1];
    let mut sup = 0.0_f64;
    for i in (0..n).rev() {
        let dt = lattice.grid().dt(i);
        acc = (0..=i)
            .map(|j| {
                let z2: f64 = field.z_at(i, j).iter().map(|v| v * v).sum();
                0.5 * (acc[j] + acc[j + 1]) + z2 * dt
            })
            .collect();
        sup = acc.iter().fold(sup, |m, v| m.max(*v));
    }
    Ok(sup.sqrt())
}

/// Empirical `E[(Σ |Z|²/Y Δt)^p]` with its standard error over an ensemble field.
pub fn z_energy_moment(field: &SolutionField, p: f64) -> Result<(f64, f64)> {
    let paths = match field.support {
        SupportKind::Ensemble { paths, .. } => paths,
        _ => return Err(Error::Unsupported("energy moments need an ensemble field".into())),
    };
    if !(p > 0.0) {
        return Err(Error::InvalidConfig(format!("moment order must be positive, got {p}")));
    }
    let samples: Vec<f64> = (0..paths)
        .map(|m| {
            let mut s = 0.0;
            for i in 0..field.z.len() {
                let dt = field.times[i + 1] - field.times[i];
                let z2: f64 = field.z_at(i, m).iter().map(|v| v * v).sum();
                s += z2 / field.y[i][m] * dt;
            }
            s.powf(p)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / paths as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (paths.max(2) - 1) as f64;
    Ok((mean, (var / paths as f64).sqrt()))
}
