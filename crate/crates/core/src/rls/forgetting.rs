//! Variable-rate forgetting from an F-test on windows of residual errors,
//! and the exponential-resetting matrix.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Matrix2, Vector2};

use super::special::f_quantile;
use crate::error::{Error, Result};

/// Condition number of the long-window covariance above which the test
/// reports "no change".
pub const MAX_LONG_WINDOW_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrfConfig {
    pub eta: f64,
    pub tau_n: usize,
    pub tau_d: usize,
    pub alpha: f64,
}

impl VrfConfig {
    pub fn new(eta: f64, tau_n: usize, tau_d: usize, alpha: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be nonnegative, got {eta}")));
        }
        if tau_n < 1 {
            return Err(Error::param("tauN", "must be at least 1"));
        }
        if tau_d < 6 {
            return Err(Error::param("tauD", format!("must be at least 6, got {tau_d}")));
        }
        if tau_d <= tau_n {
            return Err(Error::param("tauD", format!("must exceed tauN = {tau_n}, got {tau_d}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { eta, tau_n, tau_d, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrfConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// The constants `(a, b, c)` of the Lawley–Hotelling F approximation.
pub fn vrf_constants(tau_n: usize, tau_d: usize) -> Result<VrfConstants> {
    if tau_d < 6 {
        return Err(Error::param("tauD", format!("must be at least 6, got {tau_d}")));
    }
    let (tn, td) = (tau_n as f64, tau_d as f64);
    let a = (tn + td - 3.0) * (td - 1.0) / ((td - 5.0) * (td - 2.0));
    if a == 1.0 {
        return Err(Error::param("tauN", "window sizes give a = 1 (division by zero in b)"));
    }
    let b = 4.0 + 2.0 * (tn + 1.0) / (a - 1.0);
    let c = 2.0 * tn * (b - 2.0) / (b * (td - 3.0));
    Ok(VrfConstants { a, b, c })
}

/// `g = √((τn/τd) tr(Σn Σd⁻¹) / c) - √critical`, where `critical` is the
/// `1 - α` quantile of `F(2τn, b)`. `None` when `Σd` is numerically singular.
pub fn vrf_statistic(
    sigma_n: &Matrix2<f64>,
    sigma_d: &Matrix2<f64>,
    tau_n: usize,
    tau_d: usize,
    constants: &VrfConstants,
    critical: f64,
) -> Option<f64> {
    let eig = sigma_d.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_LONG_WINDOW_CONDITION {
        return None;
    }
    let inv = sigma_d.try_inverse()?;
    let trace = (sigma_n * inv).trace();
    let ratio = (tau_n as f64 / tau_d as f64) * trace / constants.c;
    Some(ratio.max(0.0).sqrt() - critical.sqrt())
}

/// `λ = 1 / (1 + η g 1[g])`, with the unit step `1[0] = 0`.
pub fn forgetting_factor(g: f64, eta: f64) -> f64 {
    let step = if g > 0.0 { 1.0 } else { 0.0 };
    1.0 / (1.0 + eta * g * step)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

/// Ring buffer of the most recent two-dimensional residual errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgettingWindow {
    buf: VecDeque<Vector2<f64>>,
    capacity: usize,
    seen: usize,
}

impl ForgettingWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
            seen: 0,
        }
    }

    pub fn push(&mut self, eps: Vector2<f64>) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(eps);
        self.seen += 1;
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Mean and covariance (divisor `τ`) of the latest `tau` entries.
    pub fn stats(&self, tau: usize) -> Result<WindowStats> {
        if tau == 0 || tau > self.buf.len() {
            return Err(Error::NotReady {
                needed: tau.max(1),
                have: self.buf.len(),
            });
        }
        let recent = self.buf.iter().skip(self.buf.len() - tau);
        let n = tau as f64;
        let mean = recent.clone().fold(Vector2::zeros(), |acc, e| acc + e) / n;
        let cov = recent.fold(Matrix2::zeros(), |acc, e| {
            let d = e - mean;
            acc + d * d.transpose()
        }) / n;
        Ok(WindowStats { mean, cov })
    }
}

/// Per-step forgetting factor selection: a residual-error window plus the
/// precomputed test constants.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableRateForgetting {
    config: VrfConfig,
    constants: VrfConstants,
    critical: f64,
    window: ForgettingWindow,
}

impl VariableRateForgetting {
    pub fn new(config: VrfConfig) -> Result<Self> {
        let constants = vrf_constants(config.tau_n, config.tau_d)?;
        let critical = if config.alpha == 0.0 {
            f64::INFINITY
        } else {
            f_quantile(2.0 * config.tau_n as f64, constants.b, 1.0 - config.alpha)?
        };
        Ok(Self {
            config,
            constants,
            critical,
            window: ForgettingWindow::new(config.tau_d),
        })
    }

    pub fn config(&self) -> &VrfConfig {
        &self.config
    }

    pub fn constants(&self) -> &VrfConstants {
        &self.constants
    }

    /// `F⁻¹(2τn, b)(1 - α)`.
    pub fn critical_value(&self) -> f64 {
        self.critical
    }

    /// Records `eps` and returns the statistic `g` (when defined) and `λ`.
    /// `λ = 1` until the long window is full.
    pub fn push(&mut self, eps: Vector2<f64>) -> (Option<f64>, f64) {
        self.window.push(eps);
        let (tau_n, tau_d) = (self.config.tau_n, self.config.tau_d);
        let (Ok(short), Ok(long)) = (self.window.stats(tau_n), self.window.stats(tau_d)) else {
            return (None, 1.0);
        };
        match vrf_statistic(&short.cov, &long.cov, tau_n, tau_d, &self.constants, self.critical) {
            Some(g) => (Some(g), forgetting_factor(g, self.config.eta)),
            None => (None, 1.0),
        }
    }
}

/// Exponential-resetting matrix `R∞`, positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct ErConfig {
    r_inf: DMatrix<f64>,
    max_inverse_eigenvalue: f64,
}

impl ErConfig {
    pub fn new(r_inf: DMatrix<f64>) -> Result<Self> {
        if r_inf.nrows() != r_inf.ncols() || r_inf.nrows() == 0 {
            return Err(Error::Dimension("resetting matrix must be square".into()));
        }
        if (&r_inf - r_inf.transpose()).abs().max() > 1e-12 * r_inf.abs().max() {
            return Err(Error::param("Rinf", "must be symmetric"));
        }
        if r_inf.clone().cholesky().is_none() {
            return Err(Error::param("Rinf", "must be positive definite"));
        }
        let min_eig = r_inf.clone().symmetric_eigenvalues().min();
        Ok(Self {
            r_inf,
            max_inverse_eigenvalue: 1.0 / min_eig,
        })
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * scale)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r_inf
    }

    pub fn dim(&self) -> usize {
        self.r_inf.nrows()
    }

    /// `λmax(R∞⁻¹)`, the eventual bound on `λmax(P)`.
    pub fn max_inverse_eigenvalue(&self) -> f64 {
        self.max_inverse_eigenvalue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants_reference_configuration() {
        // a = 97·79 / (75·78) = 7663/5850 exactly
        let k = vrf_constants(20, 80).unwrap();
        let a = 7663.0 / 5850.0;
        let b = 4.0 + 42.0 / (a - 1.0);
        let c = 40.0 * (b - 2.0) / (b * 77.0);
        assert!((k.a - a).abs() < 1e-14);
        assert!((k.b - b).abs() < 1e-10);
        assert!((k.c - c).abs() < 1e-14);
        assert!((k.a - 1.30991).abs() < 1e-5);
        assert!((k.b - 139.52).abs() < 5e-3);
        assert!((k.c - 0.51203).abs() < 1e-5);

        // (1, 7): a = 5·6 / (2·5) = 3, b = 4 + 4/2 = 6, c = 2·4/(6·4) = 1/3
        let k = vrf_constants(1, 7).unwrap();
        assert!((k.a - 3.0).abs() < 1e-14);
        assert!((k.b - 6.0).abs() < 1e-14);
        assert!((k.c - 1.0 / 3.0).abs() < 1e-14);

        assert!(vrf_constants(20, 5).is_err());
        assert!(VrfConfig::new(0.5, 20, 5, 0.08).is_err());
        assert!(VrfConfig::new(0.5, 20, 20, 0.08).is_err());
        assert!(VrfConfig::new(-0.5, 2, 20, 0.08).is_err());
    }

    #[test]
    fn window_stats_examples() {
        let mut w = ForgettingWindow::new(4);
        assert!(w.stats(2).is_err());
        w.push(Vector2::new(1.0, 0.0));
        w.push(Vector2::new(-1.0, 0.0));
        let s = w.stats(2).unwrap();
        assert_eq!(s.mean, Vector2::zeros());
        assert_eq!(s.cov, Matrix2::new(1.0, 0.0, 0.0, 0.0));

        let mut w = ForgettingWindow::new(5);
        for _ in 0..7 {
            w.push(Vector2::new(0.3, -2.0));
        }
        assert_eq!(w.len(), 5);
        assert_eq!(w.seen(), 7);
        assert!(w.stats(5).unwrap().cov.abs().max() < 1e-15);
    }

    #[test]
    fn window_stats_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = ForgettingWindow::new(20);
        let mut all = Vec::new();
        for _ in 0..35 {
            let e = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..3.0));
            w.push(e);
            all.push(e);
        }
        for tau in [1, 7, 20] {
            let recent = &all[all.len() - tau..];
            let mut mean = [0.0; 2];
            for e in recent {
                mean[0] += e[0] / tau as f64;
                mean[1] += e[1] / tau as f64;
            }
            let mut cov = [[0.0; 2]; 2];
            for e in recent {
                for i in 0..2 {
                    for j in 0..2 {
                        cov[i][j] += (e[i] - mean[i]) * (e[j] - mean[j]) / tau as f64;
                    }
                }
            }
            let s = w.stats(tau).unwrap();
            for i in 0..2 {
                assert!((s.mean[i] - mean[i]).abs() < 1e-14);
                for j in 0..2 {
                    assert!((s.cov[(i, j)] - cov[i][j]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn statistic_identity_pair() {
        let k = vrf_constants(20, 80).unwrap();
        let crit = f_quantile(40.0, k.b, 0.92).unwrap();
        let g = vrf_statistic(&Matrix2::identity(), &Matrix2::identity(), 20, 80, &k, crit).unwrap();
        let expected = (0.25 * 2.0 / k.c).sqrt() - crit.sqrt();
        assert!((g - expected).abs() < 1e-14);

        let g0 = vrf_statistic(&Matrix2::zeros(), &Matrix2::identity(), 20, 80, &k, crit).unwrap();
        assert!((g0 + crit.sqrt()).abs() < 1e-14);
        assert!(g0 < 0.0);

        // singular long window
        let singular = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        assert!(vrf_statistic(&Matrix2::identity(), &singular, 20, 80, &k, crit).is_none());
        assert!(vrf_statistic(&Matrix2::identity(), &Matrix2::zeros(), 20, 80, &k, crit).is_none());
    }

    #[test]
    fn statistic_monotone_in_scale() {
        let k = vrf_constants(20, 80).unwrap();
        let crit = f_quantile(40.0, k.b, 0.92).unwrap();
        let sigma = Matrix2::new(2.0, 0.3, 0.3, 0.5);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..50 {
            let g = vrf_statistic(&(sigma * (i as f64 * 0.2)), &sigma, 20, 80, &k, crit).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn forgetting_factor_examples() {
        assert_eq!(forgetting_factor(-3.0, 0.7), 1.0);
        assert_eq!(forgetting_factor(2.0, 0.5), 0.5);
        assert_eq!(forgetting_factor(0.0, 0.5), 1.0);
        assert_eq!(forgetting_factor(5.0, 0.0), 1.0);
    }

    #[test]
    fn warmup_keeps_lambda_one() {
        let mut vrf = VariableRateForgetting::new(VrfConfig::new(0.5, 2, 8, 0.08).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..7 {
            let (g, lambda) = vrf.push(Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            assert!(g.is_none(), "step {i}");
            assert_eq!(lambda, 1.0);
        }
        let (g, _) = vrf.push(Vector2::new(0.1, 0.2));
        assert!(g.is_some());
    }

    #[test]
    fn burst_triggers_forgetting() {
        let mut vrf = VariableRateForgetting::new(VrfConfig::new(0.5, 20, 80, 0.08).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            vrf.push(Vector2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)));
        }
        let mut min_lambda: f64 = 1.0;
        for _ in 0..20 {
            let (_, l) = vrf.push(Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)));
            min_lambda = min_lambda.min(l);
        }
        assert!(min_lambda < 1.0);
    }

    #[test]
    fn er_config_validation() {
        assert!(ErConfig::new(DMatrix::from_element(1, 1, -1.0)).is_err());
        assert!(ErConfig::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
        let er = ErConfig::scaled_identity(25, 50.0).unwrap();
        assert!((er.max_inverse_eigenvalue() - 0.02).abs() < 1e-15);
    }
}
