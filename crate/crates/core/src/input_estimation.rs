//! Input-estimation subsystem: regressor assembly, the time-varying Markov
//! coefficients of the estimator loop, filtered signals, and the stacked
//! regression handed to RLS.
//!
//! All histories are most-recent-first and zero before the first sample.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::kalman::LtiModel;
use crate::rls::StackedRegression;

#[derive(Debug, Clone, PartialEq)]
pub struct IeConfig {
    pub n_e: usize,
    pub n_f: usize,
    pub r_z: f64,
    pub r_d: f64,
    pub r_theta: DMatrix<f64>,
}

impl IeConfig {
    /// Config with `R_θ = r_theta · I`.
    pub fn new(n_e: usize, n_f: usize, r_z: f64, r_d: f64, r_theta: f64) -> Result<Self> {
        let dim = 2 * n_e + 1;
        let cfg = Self {
            n_e,
            n_f,
            r_z,
            r_d,
            r_theta: DMatrix::identity(dim, dim) * r_theta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_e < 1 {
            return Err(Error::param("nE", "must be at least 1"));
        }
        if self.n_f < 1 {
            return Err(Error::param("nF", "must be at least 1"));
        }
        if !(self.r_z > 0.0 && self.r_z.is_finite()) {
            return Err(Error::param("Rz", format!("must be positive, got {}", self.r_z)));
        }
        if !(self.r_d > 0.0 && self.r_d.is_finite()) {
            return Err(Error::param("Rd", format!("must be positive, got {}", self.r_d)));
        }
        let dim = self.theta_dim();
        if self.r_theta.nrows() != dim || self.r_theta.ncols() != dim {
            return Err(Error::Dimension(format!(
                "Rtheta is {}x{}, expected {dim}x{dim}",
                self.r_theta.nrows(),
                self.r_theta.ncols()
            )));
        }
        if self.r_theta.clone().cholesky().is_none() {
            return Err(Error::param("Rtheta", "must be positive definite"));
        }
        Ok(())
    }

    /// `lθ = 2 nE + 1`.
    pub fn theta_dim(&self) -> usize {
        2 * self.n_e + 1
    }
}

/// `[d̂_{k-1} … d̂_{k-nE}, z_k, z_{k-1} … z_{k-nE}]`.
///
/// `d_hat_hist` and `z_hist` are most-recent-first (`[0]` is step `k - 1`);
/// missing entries count as zero.
pub fn build_regressor(d_hat_hist: &VecDeque<f64>, z_hist: &VecDeque<f64>, z: f64, n_e: usize) -> RowDVector<f64> {
    let at = |h: &VecDeque<f64>, i: usize| h.get(i).copied().unwrap_or(0.0);
    RowDVector::from_fn(2 * n_e + 1, |_, j| {
        if j < n_e {
            at(d_hat_hist, j)
        } else if j == n_e {
            z
        } else {
            at(z_hist, j - n_e - 1)
        }
    })
}

/// `d̂_k = Φ_k θ_k`.
pub fn estimate_input(phi: &RowDVector<f64>, theta: &DVector<f64>) -> f64 {
    phi.dot(&theta.transpose())
}

/// `H_1 … H_{nF}` at step `k`.
///
/// `abar_hist[j]` is `Ā_{k-1-j}`. `H_1 = C B`,
/// `H_i = C Ā_{k-1} ⋯ Ā_{k-i+1} B` for `2 ≤ i ≤ k`, and `H_i = 0` for `i > k`.
pub fn markov_coefficients(model: &LtiModel, abar_hist: &VecDeque<DMatrix<f64>>, k: usize, n_f: usize) -> Vec<f64> {
    let mut h = vec![0.0; n_f];
    let mut row = model.c().clone_owned();
    for (i, hi) in h.iter_mut().enumerate().take(n_f.min(k)) {
        if i > 0 {
            match abar_hist.get(i - 1) {
                Some(abar) => row = &row * abar,
                None => break,
            }
        }
        *hi = row.dot(&model.b().transpose());
    }
    h
}

/// `Φ_f = Σ H_i Φ_{k-i}` and `d̂_f = Σ H_i d̂_{k-i}`.
pub fn filter_signals(
    h: &[f64],
    phi_hist: &VecDeque<RowDVector<f64>>,
    d_hat_hist: &VecDeque<f64>,
    dim: usize,
) -> (RowDVector<f64>, f64) {
    let mut phi_f = RowDVector::zeros(dim);
    let mut d_hat_f = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        if hi == 0.0 {
            continue;
        }
        if let Some(phi) = phi_hist.get(i) {
            phi_f += phi * hi;
        }
        d_hat_f += hi * d_hat_hist.get(i).copied().unwrap_or(0.0);
    }
    (phi_f, d_hat_f)
}

/// `Φ̃ = [Φ_f; Φ]`, `z̃ = (z - d̂_f, 0)`, `R̃ = diag(Rz, Rd)`.
pub fn assemble_stacked(
    phi: &RowDVector<f64>,
    phi_f: &RowDVector<f64>,
    z: f64,
    d_hat_f: f64,
    r_z: f64,
    r_d: f64,
) -> Result<StackedRegression> {
    if phi.len() != phi_f.len() {
        return Err(Error::Dimension(format!(
            "Φ has {} columns, Φ_f has {}",
            phi.len(),
            phi_f.len()
        )));
    }
    let mut stacked = DMatrix::zeros(2, phi.len());
    stacked.row_mut(0).copy_from(phi_f);
    stacked.row_mut(1).copy_from(phi);
    StackedRegression::new(
        stacked,
        DVector::from_column_slice(&[z - d_hat_f, 0.0]),
        DVector::from_column_slice(&[r_z, r_d]),
    )
}

/// Histories needed by the input-estimation subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct IeBuffers {
    n_e: usize,
    n_f: usize,
    k: usize,
    d_hat: VecDeque<f64>,
    z: VecDeque<f64>,
    phi: VecDeque<RowDVector<f64>>,
    abar: VecDeque<DMatrix<f64>>,
}

/// Quantities computed for the current step before the RLS update.
#[derive(Debug, Clone, PartialEq)]
pub struct IeStep {
    pub phi: RowDVector<f64>,
    pub phi_f: RowDVector<f64>,
    pub d_hat_f: f64,
    pub markov: Vec<f64>,
    pub stacked: StackedRegression,
}

impl IeBuffers {
    pub fn new(n_e: usize, n_f: usize) -> Self {
        Self {
            n_e,
            n_f,
            k: 0,
            d_hat: VecDeque::with_capacity(n_e.max(n_f)),
            z: VecDeque::with_capacity(n_e),
            phi: VecDeque::with_capacity(n_f),
            abar: VecDeque::with_capacity(n_f.saturating_sub(1)),
        }
    }

    /// Index of the step about to be processed.
    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn prepare(&self, model: &LtiModel, cfg: &IeConfig, z: f64) -> Result<IeStep> {
        let phi = build_regressor(&self.d_hat, &self.z, z, self.n_e);
        let markov = markov_coefficients(model, &self.abar, self.k, self.n_f);
        let (phi_f, d_hat_f) = filter_signals(&markov, &self.phi, &self.d_hat, phi.len());
        let stacked = assemble_stacked(&phi, &phi_f, z, d_hat_f, cfg.r_z, cfg.r_d)?;
        Ok(IeStep {
            phi,
            phi_f,
            d_hat_f,
            markov,
            stacked,
        })
    }

    /// Records step `k` and advances to `k + 1`.
    pub fn commit(&mut self, d_hat: f64, z: f64, phi: RowDVector<f64>, abar: DMatrix<f64>) {
        push_front_bounded(&mut self.d_hat, d_hat, self.n_e.max(self.n_f));
        push_front_bounded(&mut self.z, z, self.n_e);
        push_front_bounded(&mut self.phi, phi, self.n_f);
        push_front_bounded(&mut self.abar, abar, self.n_f.saturating_sub(1));
        self.k += 1;
    }
}

fn push_front_bounded<T>(buf: &mut VecDeque<T>, value: T, cap: usize) {
    if cap == 0 {
        return;
    }
    if buf.len() == cap {
        buf.pop_back();
    }
    buf.push_front(value);
}
