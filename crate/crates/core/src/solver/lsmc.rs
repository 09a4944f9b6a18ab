use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::driver::{DriverSpec, Family};
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::field::{SolutionField, SolverMeta, SupportKind};
use crate::terminal::TerminalCondition;

use super::config::SolverConfig;
use super::implicit::implicit_step;

const CHUNK: usize = 4096;

/// Multi-indices of total degree `<= degree` in `dim` variables, ordered by degree then lexicographically.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, degree, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then(b.cmp(a)));
    out
}

/// Probabilists' Hermite polynomials `He_0..He_degree` at `x`.
fn hermite(x: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = x;
    }
    for k in 1..degree {
        out[k + 1] = x * out[k] - k as f64 * out[k - 1];
    }
}

struct Basis {
    indices: Vec<Vec<usize>>,
    degree: usize,
    scale: f64,
}

impl Basis {
    fn new(dim: usize, degree: usize, t: f64) -> Self {
        if t == 0.0 {
            Basis { indices: vec![vec![0; dim]], degree: 0, scale: 1.0 }
        } else {
            Basis { indices: multi_indices(dim, degree), degree, scale: 1.0 / t.sqrt() }
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    fn eval(&self, w: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let stride = self.degree + 1;
        for (d, wd) in w.iter().enumerate() {
            hermite(wd * self.scale, self.degree, &mut scratch[d * stride..(d + 1) * stride]);
        }
        for (b, idx) in self.indices.iter().enumerate() {
            out[b] = idx.iter().enumerate().map(|(d, &k)| scratch[d * stride + k]).product();
        }
    }
}

/// Least squares of several targets on a shared basis, with fixed-order chunked sums.
fn regress(
    ens: &PathEnsemble,
    i: usize,
    basis: &Basis,
    targets: &[&[f64]],
) -> Result<Vec<DVector<f64>>> {
    let (m_paths, p, k) = (ens.paths(), basis.len(), targets.len());
    if m_paths < p {
        return Err(Error::RankDeficient { step: i });
    }
    let dim = ens.dim();
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..m_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut g = vec![0.0; p * p];
            let mut b = vec![0.0; p * k];
            let mut phi = vec![0.0; p];
            let mut scratch = vec![0.0; dim * (basis.degree + 1)];
            for m in c * CHUNK..((c + 1) * CHUNK).min(m_paths) {
                basis.eval(ens.w(i, m), &mut phi, &mut scratch);
                for r in 0..p {
                    for s in r..p {
                        g[r * p + s] += phi[r] * phi[s];
                    }
                    for (q, tq) in targets.iter().enumerate() {
                        b[r * k + q] += phi[r] * tq[m];
                    }
                }
            }
            (g, b)
        })
        .collect();
    let mut g = DMatrix::<f64>::zeros(p, p);
    let mut b = DMatrix::<f64>::zeros(p, k);
    for (gc, bc) in &partial {
        for r in 0..p {
            for s in r..p {
                g[(r, s)] += gc[r * p + s];
            }
            for q in 0..k {
                b[(r, q)] += bc[r * k + q];
            }
        }
    }
    for r in 0..p {
        for s in 0..r {
            g[(r, s)] = g[(s, r)];
        }
    }
    let chol = g.cholesky().ok_or(Error::RankDeficient { step: i })?;
    let diag: Vec<f64> = (0..p).map(|r| chol.l_dirty()[(r, r)].powi(2)).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), v| (l.min(*v), h.max(*v)));
    if !(lo > 1e-12 * hi) {
        return Err(Error::RankDeficient { step: i });
    }
    Ok((0..k).map(|q| chol.solve(&b.column(q).into_owned())).collect())
}

fn fitted(ens: &PathEnsemble, i: usize, basis: &Basis, coef: &DVector<f64>) -> Vec<f64> {
    let dim = ens.dim();
    (0..ens.paths())
        .into_par_iter()
        .map_init(
            || (vec![0.0; basis.len()], vec![0.0; dim * (basis.degree + 1)]),
            |(phi, scratch), m| {
                basis.eval(ens.w(i, m), phi, scratch);
                phi.iter().zip(coef.iter()).map(|(a, b)| a * b).sum()
            },
        )
        .collect()
}

/// Backward Euler regression scheme from per-path terminal values.
pub fn lsmc_values(
    ens: &PathEnsemble,
    terminal: Vec<f64>,
    f: &(dyn Fn(f64, f64, &[f64]) -> f64 + Sync),
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    cfg.validate()?;
    let (n, m_paths, dim) = (ens.steps(), ens.paths(), ens.dim());
    if terminal.len() != m_paths {
        return Err(Error::InvalidConfig("terminal values must have one entry per path".into()));
    }
    if let Some(m) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time_index: n, node: m });
    }
    let grid = ens.grid().clone();
    let mut y: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut acc = vec![0.0; m_paths];
    let mut meta = SolverMeta { method: "lsmc".into(), ..Default::default() };
    meta.regression_residuals = vec![0.0; n];
    y[n] = terminal;
    for i in (0..n).rev() {
        let (t, dt) = (grid.time(i), grid.dt(i));
        let basis = Basis::new(dim, cfg.basis_degree, t);
        let next = &y[i + 1];
        let cy = regress(ens, i, &basis, &[next.as_slice()])?;
        let e = fitted(ens, i, &basis, &cy[0]);
        let ss: f64 = next.iter().zip(&e).map(|(a, b)| (a - b).powi(2)).sum();
        meta.regression_residuals[i] = (ss / m_paths as f64).sqrt();
        let zt: Vec<Vec<f64>> = (0..dim)
            .map(|d| (0..m_paths).map(|m| (next[m] - e[m]) * ens.dw(i, m)[d] / dt).collect())
            .collect();
        let refs: Vec<&[f64]> = zt.iter().map(|v| v.as_slice()).collect();
        let cz = regress(ens, i, &basis, &refs)?;
        let zf: Vec<Vec<f64>> = cz.iter().map(|c| fitted(ens, i, &basis, c)).collect();
        let mut zi = vec![0.0; m_paths * dim];
        for m in 0..m_paths {
            for d in 0..dim {
                zi[m * dim + d] = zf[d][m];
            }
        }
        let steps: Vec<Result<(f64, f64, f64, usize, bool)>> = (0..m_paths)
            .into_par_iter()
            .map(|m| {
                let zm = &zi[m * dim..(m + 1) * dim];
                let out = implicit_step(e[m], dt, |yy| f(t, yy, zm), cfg, i, m)?;
                Ok((out.y, f(t, out.y, zm) * dt, out.residual, out.iterations, out.damped))
            })
            .collect();
        let mut yi = Vec::with_capacity(m_paths);
        for (m, r) in steps.into_iter().enumerate() {
            let (yy, inc, res, it, damped) = r?;
            yi.push(yy);
            acc[m] += inc;
            meta.max_residual = meta.max_residual.max(res);
            meta.max_iterations_used = meta.max_iterations_used.max(it);
            meta.damped_nodes += damped as usize;
        }
        y[i] = yi;
        z[i] = zi;
    }
    let est: Vec<f64> = y[n].iter().zip(&acc).map(|(x, a)| x + a).collect();
    let mean = est.iter().sum::<f64>() / m_paths as f64;
    let var = est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m_paths.max(2) - 1) as f64;
    meta.y0_std_error = Some((var / m_paths as f64).sqrt());
    let states = (0..=n).map(|i| ens.w_slice(i).to_vec()).collect();
    Ok(SolutionField {
        support: SupportKind::Ensemble { paths: m_paths, seed: ens.seed() },
        dim,
        time_indices: (0..=n).collect(),
        times: grid.nodes().to_vec(),
        states,
        y,
        z,
        positive: false,
        meta,
    })
}

/// Regression-based solve of an ordinary (or log-quadratic) BSDE on an ensemble.
pub fn solve_lsmc(ens: &PathEnsemble, x: &TerminalCondition, f: &DriverSpec, cfg: &SolverConfig) -> Result<SolutionField> {
    match f.family {
        Family::Ordinary | Family::LnQ => {}
        other => {
            return Err(Error::FamilyMismatch { expected: "ordinary or lnq".into(), found: other.to_string() });
        }
    }
    let terminal: Vec<f64> = (0..ens.paths()).map(|m| x.eval(ens.terminal(m))).collect();
    if f.family == Family::LnQ {
        if let Some(m) = terminal.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveTerminal { value: terminal[m], state: ens.terminal(m).to_vec() });
        }
    }
    let g = f.f.clone();
    let mut field = lsmc_values(ens, terminal, &|t, y, z| g(t, y, z), cfg)?;
    field.meta.lineage = f.lineage_names();
    field.positive = field.y.iter().flatten().all(|v| *v > 0.0);
    Ok(field)
}
