use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Monte Carlo Brownian paths on a time grid, stored step-major.
///
/// Each path draws from its own ChaCha stream keyed by `(seed, path)`, so the
/// ensemble is bit-identical for a given `(seed, grid, dim, paths)` regardless
/// of thread count.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    paths: usize,
    seed: u64,
    /// `dw[(i * paths + m) * dim + d]`, increment over step `i`.
    dw: Vec<f64>,
    /// `w[(i * paths + m) * dim + d]`, state at time `t_i`.
    w: Vec<f64>,
}

impl PathEnsemble {
    pub fn sample(grid: &TimeGrid, dim: usize, paths: usize, seed: u64) -> Result<Self> {
        if dim == 0 || paths == 0 {
            return Err(Error::InvalidConfig("ensemble needs dim >= 1 and paths >= 1".into()));
        }
        let n = grid.steps();
        let sd: Vec<f64> = (0..n).map(|i| grid.dt(i).sqrt()).collect();
        let per_path = n * dim;
        let mut path_major = vec![0.0; paths * per_path];
        path_major.par_chunks_mut(per_path).enumerate().for_each(|(m, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            for i in 0..n {
                for d in 0..dim {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    chunk[i * dim + d] = sd[i] * g;
                }
            }
        });
        let mut dw = vec![0.0; paths * per_path];
        dw.par_chunks_mut(paths * dim).enumerate().for_each(|(i, slab)| {
            for m in 0..paths {
                for d in 0..dim {
                    slab[m * dim + d] = path_major[m * per_path + i * dim + d];
                }
            }
        });
        let stride = paths * dim;
        let mut w = vec![0.0; (n + 1) * stride];
        for i in 0..n {
            let (done, rest) = w.split_at_mut((i + 1) * stride);
            let prev = &done[i * stride..];
            let next = &mut rest[..stride];
            let inc = &dw[i * stride..(i + 1) * stride];
            next.par_iter_mut().enumerate().for_each(|(k, v)| *v = prev[k] + inc[k]);
        }
        Ok(Self { grid: grid.clone(), dim, paths, seed, dw, w })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn dw(&self, i: usize, m: usize) -> &[f64] {
        let o = (i * self.paths + m) * self.dim;
        &self.dw[o..o + self.dim]
    }

    pub fn w(&self, i: usize, m: usize) -> &[f64] {
        let o = (i * self.paths + m) * self.dim;
        &self.w[o..o + self.dim]
    }

    /// All states at time index `i`, path-major.
    pub fn w_slice(&self, i: usize) -> &[f64] {
        let s = self.paths * self.dim;
        &self.w[i * s..(i + 1) * s]
    }

    pub fn terminal(&self, m: usize) -> &[f64] {
        self.w(self.steps(), m)
    }
}
