//! Online selection of the process and sensor noise covariances by matching
//! the filter-predicted residual variance to the empirical one.
//!
//! With `V1 = η I`, `J_f(η) = Ŝ - C (A Pda Aᵀ + η I) Cᵀ`. When some grid
//! value of `J_f` is positive, the target `β min + (1 - β) max` over the
//! positive values picks `η`, and `V2 = J_f(η)` makes the residual-variance
//! mismatch exactly zero. Otherwise `V2 = 0` and `η` minimizes `|J_f|`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kalman::LtiModel;

pub const DEFAULT_GRID_SIZE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    eta_l: f64,
    eta_u: f64,
    beta: f64,
    grid: Vec<f64>,
}

impl AdaptConfig {
    pub fn new(eta_l: f64, eta_u: f64, beta: f64, grid_size: usize) -> Result<Self> {
        if !(eta_l >= 0.0 && eta_l.is_finite()) {
            return Err(Error::param("etaL", format!("must be nonnegative, got {eta_l}")));
        }
        if !(eta_u > eta_l && eta_u.is_finite()) {
            return Err(Error::param("etaU", format!("must exceed etaL = {eta_l}, got {eta_u}")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::param("beta", format!("must lie in [0, 1], got {beta}")));
        }
        if grid_size < 2 {
            return Err(Error::param("gridSize", "must be at least 2"));
        }
        Ok(Self {
            eta_l,
            eta_u,
            beta,
            grid: eta_grid(eta_l, eta_u, grid_size),
        })
    }

    pub fn eta_l(&self) -> f64 {
        self.eta_l
    }

    pub fn eta_u(&self) -> f64 {
        self.eta_u
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
}

/// Log-spaced grid on `[lo, hi]` with exact endpoints; linear when `lo = 0`.
fn eta_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    let mut grid: Vec<f64> = if lo > 0.0 {
        let (a, b) = (lo.ln(), hi.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / last).collect()
    };
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

/// Streaming mean and sum of squared deviations of the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl ResidualStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, z: f64) {
        self.count += 1;
        let delta = z - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (z - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `Ŝ_k = (1/k) Σ_{i=0}^{k} (z_i - z̄_k)²`, defined once `k ≥ 1`.
    pub fn sample_variance(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::NotReady {
                needed: 2,
                have: self.count,
            });
        }
        Ok(self.m2.max(0.0) / (self.count - 1) as f64)
    }
}

/// `J_f(V1) = Ŝ - C (A Pda Aᵀ + V1) Cᵀ`.
pub fn jf(s_hat: f64, p_da_prev: &DMatrix<f64>, model: &LtiModel, v1: &DMatrix<f64>) -> f64 {
    let a = model.a();
    let c = model.c();
    let pf = a * p_da_prev * a.transpose() + v1;
    s_hat - (c * pf * c.transpose())[(0, 0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedCovariances {
    pub eta: f64,
    pub v1: DMatrix<f64>,
    pub v2: f64,
}

/// Grid search for `(η, V2)` minimizing `|J_f(η I) - V2|` over `V2 ≥ 0`.
pub fn adapt_covariances(
    stats: &ResidualStats,
    p_da_prev: &DMatrix<f64>,
    model: &LtiModel,
    cfg: &AdaptConfig,
) -> Result<AdaptedCovariances> {
    let s_hat = stats.sample_variance()?;
    let n = model.order();
    let identity = DMatrix::<f64>::identity(n, n);
    let values: Vec<f64> = cfg.grid.iter().map(|&eta| jf(s_hat, p_da_prev, model, &(&identity * eta))).collect();

    let positive = values.iter().copied().filter(|&v| v > 0.0);
    let (min_pos, max_pos) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let target = if min_pos.is_finite() {
        Some(cfg.beta * min_pos + (1.0 - cfg.beta) * max_pos)
    } else {
        None
    };

    let goal = target.unwrap_or(0.0);
    let best = values
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| (*x - goal).abs().total_cmp(&(*y - goal).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let eta = cfg.grid[best];
    let v2 = if target.is_some() { values[best] } else { 0.0 };
    Ok(AdaptedCovariances {
        eta,
        v1: identity * eta,
        v2,
    })
}
