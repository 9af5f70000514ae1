//! Recursive least squares on the stacked retrospective regression, in the
//! classic form and with variable-rate forgetting plus exponential
//! resetting (VRF-ER).
//!
//! Both updates act on the covariance directly through the matrix
//! inversion lemma, so the common path is a rank-`m` correction (`m = 2`
//! for the estimator). The VRF-ER blend `λ P⁻¹ + (1 - λ) R∞` costs one
//! extra `lθ × lθ` solve, and only on steps where `λ < 1`.

pub mod forgetting;
pub mod special;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

pub use forgetting::{
    forgetting_factor, vrf_constants, vrf_statistic, ErConfig, ForgettingWindow, VariableRateForgetting,
    VrfConfig, VrfConstants, WindowStats,
};
pub use special::{f_cdf, f_quantile};

/// One stacked regression `(Φ̃, z̃, diag(R̃))` for the update.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedRegression {
    pub phi: DMatrix<f64>,
    pub z: DVector<f64>,
    pub weights: DVector<f64>,
}

impl StackedRegression {
    pub fn new(phi: DMatrix<f64>, z: DVector<f64>, weights: DVector<f64>) -> Result<Self> {
        let m = phi.nrows();
        if z.len() != m || weights.len() != m {
            return Err(Error::Dimension(format!(
                "regressor has {m} rows but z has {} and weights {}",
                z.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::param("Rtilde", format!("weights must be positive, got {w}")));
        }
        Ok(Self { phi, z, weights })
    }
}

/// `ε = z̃ + Φ̃ θ`.
pub fn residual_error(z: &DVector<f64>, phi: &DMatrix<f64>, theta: &DVector<f64>) -> DVector<f64> {
    z + phi * theta
}

/// Coefficient estimate `θ` and its covariance `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    theta: DVector<f64>,
    cov: DMatrix<f64>,
}

impl RlsState {
    /// `θ₀` with `P₀ = R_θ⁻¹`.
    pub fn new(theta0: DVector<f64>, r_theta: &DMatrix<f64>) -> Result<Self> {
        let chol = r_theta
            .clone()
            .cholesky()
            .ok_or_else(|| Error::param("Rtheta", "must be symmetric positive definite"))?;
        let mut cov = chol.inverse();
        symmetrize(&mut cov);
        Self::with_covariance(theta0, cov)
    }

    pub fn with_covariance(theta: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = theta.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, theta has length {n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::param("P", "covariance must be symmetric positive definite"));
        }
        Ok(Self { theta, cov })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn check(&self, reg: &StackedRegression) -> Result<()> {
        if reg.phi.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "regressor has {} columns, theta has length {}",
                reg.phi.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `P'⁻¹ = P⁻¹ + Φ̃ᵀ R̃ Φ̃`, `θ' = θ - P' Φ̃ᵀ R̃ (z̃ + Φ̃ θ)`.
    pub fn update_classic(&mut self, reg: &StackedRegression) -> Result<()> {
        self.check(reg)?;
        let prior = self.cov.clone();
        self.correct(prior, reg)
    }

    /// `P'⁻¹ = λ P⁻¹ + (1 - λ) R∞ + Φ̃ᵀ R̃ Φ̃`, then the same `θ` update.
    pub fn update_vrf_er(&mut self, reg: &StackedRegression, lambda: f64, er: &ErConfig) -> Result<()> {
        self.check(reg)?;
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::param("lambda", format!("forgetting factor must lie in (0, 1], got {lambda}")));
        }
        if er.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "resetting matrix is {0}x{0}, theta has length {1}",
                er.dim(),
                self.dim()
            )));
        }
        let prior = if lambda == 1.0 {
            self.cov.clone()
        } else {
            blend_toward_resetting(&self.cov, lambda, er.matrix())?
        };
        self.correct(prior, reg)
    }

    /// Rank-m correction of `prior` (the covariance before the data term).
    fn correct(&mut self, prior: DMatrix<f64>, reg: &StackedRegression) -> Result<()> {
        let phi = &reg.phi;
        let m = phi.nrows();
        let p_phit = &prior * phi.transpose();
        let mut s = phi * &p_phit;
        for i in 0..m {
            s[(i, i)] += 1.0 / reg.weights[i];
        }
        let s_chol = s
            .cholesky()
            .ok_or_else(|| Error::DegenerateCovariance("innovation matrix of the RLS update is not positive definite".into()))?;
        // gain = P Φᵀ S⁻¹
        let gain = s_chol.solve(&p_phit.transpose()).transpose();
        let mut cov = &prior - &gain * p_phit.transpose();
        symmetrize(&mut cov);

        let eps = residual_error(&reg.z, phi, &self.theta);
        let weighted = eps.component_mul(&reg.weights);
        self.theta -= &cov * (phi.transpose() * weighted);
        self.cov = cov;
        Ok(())
    }
}

/// `(λ P⁻¹ + (1 - λ) R∞)⁻¹ = P (λ I + (1 - λ) R∞ P)⁻¹`, via one LU solve.
fn blend_toward_resetting(p: &DMatrix<f64>, lambda: f64, r_inf: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    let s = DMatrix::identity(n, n) * lambda + r_inf * p * (1.0 - lambda);
    // Q = P S⁻¹  <=>  Sᵀ Qᵀ = P
    let qt = s
        .transpose()
        .lu()
        .solve(p)
        .ok_or_else(|| Error::DegenerateCovariance("resetting blend is singular".into()))?;
    let mut q = qt.transpose();
    symmetrize(&mut q);
    Ok(q)
}
