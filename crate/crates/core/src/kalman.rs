//! Discrete-time SISO model and the Kalman forecast / data-assimilation
//! steps used by the input and state estimator.
//!
//! Sign conventions follow the residual `z = y_fc - y`: the gain is
//! `K = -Pf Cᵀ (C Pf Cᵀ + V2)⁻¹`, so `x_da = x_fc + K z` pulls the state
//! toward the measurement.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Lower bound on the innovation variance `C Pf Cᵀ + V2` before inversion.
pub const INNOVATION_FLOOR: f64 = 1e-12;

/// `x_{k+1} = A x_k + B d_k`, `y_k = C x_k` sampled every `ts` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    ts: f64,
}

impl LtiModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, ts: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows and C has {} columns, expected {n}",
                b.len(),
                c.len()
            )));
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::param("Ts", format!("sample time must be positive, got {ts}")));
        }
        Ok(Self { a, b, c, ts })
    }

    /// The sampled integrator `A = 1, B = Ts, C = 1`. Its unknown input is
    /// the derivative of the measured output.
    pub fn differentiator(ts: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, ts),
            RowDVector::from_element(1, 1.0),
            ts,
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    fn check_vec(&self, what: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.order() {
            return Err(Error::Dimension(format!(
                "{what} has length {}, model order is {}",
                v.len(),
                self.order()
            )));
        }
        Ok(())
    }

    fn check_mat(&self, what: &str, m: &DMatrix<f64>) -> Result<()> {
        let n = self.order();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!(
                "{what} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// Forecast step: returns `(A x_da + B d̂, C x_fc)`.
    pub fn forecast(&self, x_da: &DVector<f64>, d_hat: f64) -> Result<(DVector<f64>, f64)> {
        self.check_vec("x_da", x_da)?;
        let x_fc = &self.a * x_da + &self.b * d_hat;
        let y_fc = self.output(&x_fc);
        Ok((x_fc, y_fc))
    }

    pub fn output(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(&x.transpose())
    }

    /// Data-assimilation step for residual `z` and sensor covariance `v2`.
    pub fn assimilate(
        &self,
        x_fc: &DVector<f64>,
        p_f: &DMatrix<f64>,
        z: f64,
        v2: f64,
    ) -> Result<Assimilation> {
        self.check_vec("x_fc", x_fc)?;
        self.check_mat("Pf", p_f)?;
        if !(v2 >= 0.0) {
            return Err(Error::param("V2", format!("must be nonnegative, got {v2}")));
        }
        let pf_ct: DVector<f64> = p_f * self.c.transpose();
        let mut innovation = self.c.dot(&pf_ct.transpose()) + v2;
        if !innovation.is_finite() {
            return Err(Error::DegenerateCovariance(format!(
                "innovation variance is {innovation}"
            )));
        }
        if innovation < INNOVATION_FLOOR {
            if innovation < -INNOVATION_FLOOR {
                return Err(Error::DegenerateCovariance(format!(
                    "negative innovation variance {innovation}"
                )));
            }
            innovation = INNOVATION_FLOOR;
        }
        let gain = -pf_ct / innovation;
        let x_da = x_fc + &gain * z;
        let n = self.order();
        let mut p_da = (DMatrix::identity(n, n) + &gain * &self.c) * p_f;
        symmetrize(&mut p_da);
        Ok(Assimilation { gain, x_da, p_da })
    }

    /// `A Pda Aᵀ + V1`.
    pub fn propagate_covariance(&self, p_da: &DMatrix<f64>, v1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_mat("Pda", p_da)?;
        self.check_mat("V1", v1)?;
        let mut p_f = &self.a * p_da * self.a.transpose() + v1;
        symmetrize(&mut p_f);
        Ok(p_f)
    }

    /// `Ā = A (I + K C)`, the estimator's closed-loop state map.
    pub fn closed_loop_state_map(&self, gain: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_vec("K_da", gain)?;
        let n = self.order();
        Ok(&self.a * (DMatrix::identity(n, n) + gain * &self.c))
    }
}

/// Output of [`LtiModel::assimilate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assimilation {
    pub gain: DVector<f64>,
    pub x_da: DVector<f64>,
    pub p_da: DMatrix<f64>,
}

/// `y_fc - y`.
pub fn residual(y_fc: f64, y: f64) -> f64 {
    y_fc - y
}

/// Filter belief carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBelief {
    pub x_fc: DVector<f64>,
    pub x_da: DVector<f64>,
    pub p_f: DMatrix<f64>,
    pub p_da: DMatrix<f64>,
    pub gain: DVector<f64>,
    pub z: f64,
}

impl KalmanBelief {
    /// Zero forecast state and zero forecast covariance.
    pub fn new(n: usize) -> Self {
        Self {
            x_fc: DVector::zeros(n),
            x_da: DVector::zeros(n),
            p_f: DMatrix::zeros(n, n),
            p_da: DMatrix::zeros(n, n),
            gain: DVector::zeros(n),
            z: 0.0,
        }
    }
}
