//! Adaptive input and state estimation, one sample at a time.
//!
//! Per step `k`, with measurement `y_k`:
//!
//! 1. `y_fc = C x_fc`, residual `z = y_fc - y_k`;
//! 2. residual statistics update;
//! 3. `(V1, V2)` adaptation once two residuals are in (defaults before);
//! 4. data assimilation with `V2`;
//! 5. `Ā_k`, Markov coefficients from `Ā_{k-1} …`;
//! 6. regressor, filtered signals, stacked regression;
//! 7. `d̂_k = Φ_k θ_k` (the derivative estimate);
//! 8. residual error into the forgetting window, `λ_k`, RLS update to `θ_{k+1}`;
//! 9. `Pf_{k+1} = A Pda Aᵀ + V1`;
//! 10. `x_fc,k+1 = A x_da + B d̂_k`.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::adaptation::{adapt_covariances, AdaptConfig, ResidualStats};
use crate::error::{Error, Result};
use crate::input_estimation::{estimate_input, IeBuffers, IeConfig};
use crate::kalman::{residual, KalmanBelief, LtiModel, INNOVATION_FLOOR};
use crate::linalg::sym_eigenvalues;
use crate::rls::{residual_error, ErConfig, RlsState, VariableRateForgetting, VrfConfig};

/// Covariance update variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Forgetting {
    /// Classic RLS (plain AISE).
    None,
    /// Variable-rate forgetting with exponential resetting (AISE/VRF-ER).
    VrfEr { vrf: VrfConfig, er: ErConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AiseConfig {
    pub model: LtiModel,
    pub ie: IeConfig,
    pub adapt: AdaptConfig,
    pub forgetting: Forgetting,
}

impl AiseConfig {
    pub fn validate(&self) -> Result<()> {
        self.ie.validate()?;
        if let Forgetting::VrfEr { er, .. } = &self.forgetting {
            if er.dim() != self.ie.theta_dim() {
                return Err(Error::Dimension(format!(
                    "resetting matrix is {0}x{0} but lθ = {1}",
                    er.dim(),
                    self.ie.theta_dim()
                )));
            }
        }
        Ok(())
    }
}

/// Per-step output.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Derivative estimate, in units of `y` per second.
    pub d_hat: f64,
    pub z: f64,
    pub lambda: f64,
    /// F-test statistic, when both windows were usable.
    pub g: Option<f64>,
    /// Largest eigenvalue of the RLS covariance after this step's update.
    pub eig_max_p: f64,
    pub eig_min_p: f64,
    /// `θ_{k+1}`.
    pub theta: DVector<f64>,
    pub v1_eta: f64,
    pub v2: f64,
}

#[derive(Debug, Clone)]
pub struct Aise {
    config: AiseConfig,
    belief: KalmanBelief,
    stats: ResidualStats,
    buffers: IeBuffers,
    rls: RlsState,
    vrf: Option<VariableRateForgetting>,
}

impl Aise {
    pub fn new(config: AiseConfig) -> Result<Self> {
        config.validate()?;
        let n = config.model.order();
        let rls = RlsState::new(DVector::zeros(config.ie.theta_dim()), &config.ie.r_theta)?;
        let vrf = match &config.forgetting {
            Forgetting::None => None,
            Forgetting::VrfEr { vrf, .. } => Some(VariableRateForgetting::new(*vrf)?),
        };
        Ok(Self {
            belief: KalmanBelief::new(n),
            stats: ResidualStats::new(),
            buffers: IeBuffers::new(config.ie.n_e, config.ie.n_f),
            rls,
            vrf,
            config,
        })
    }

    pub fn config(&self) -> &AiseConfig {
        &self.config
    }

    pub fn belief(&self) -> &KalmanBelief {
        &self.belief
    }

    pub fn rls(&self) -> &RlsState {
        &self.rls
    }

    pub fn steps(&self) -> usize {
        self.buffers.step_index()
    }

    pub fn step(&mut self, y: f64) -> Result<StepDiagnostics> {
        let model = &self.config.model;
        let n = model.order();

        let y_fc = model.output(&self.belief.x_fc);
        let z = residual(y_fc, y);
        self.stats.push(z);

        let (v1, v2, v1_eta) = if self.stats.count() >= 2 {
            let adapted = adapt_covariances(&self.stats, &self.belief.p_da, model, &self.config.adapt)?;
            (adapted.v1, adapted.v2, adapted.eta)
        } else {
            let eta = self.config.adapt.eta_l();
            (DMatrix::identity(n, n) * eta, INNOVATION_FLOOR, eta)
        };

        let da = model.assimilate(&self.belief.x_fc, &self.belief.p_f, z, v2)?;
        let abar = model.closed_loop_state_map(&da.gain)?;

        let ie = self.buffers.prepare(model, &self.config.ie, z)?;
        let d_hat = estimate_input(&ie.phi, self.rls.theta());

        let eps = residual_error(&ie.stacked.z, &ie.stacked.phi, self.rls.theta());
        let (g, lambda) = match (&mut self.vrf, &self.config.forgetting) {
            (Some(vrf), Forgetting::VrfEr { er, .. }) => {
                let (g, lambda) = vrf.push(Vector2::new(eps[0], eps[1]));
                self.rls.update_vrf_er(&ie.stacked, lambda, er)?;
                (g, lambda)
            }
            _ => {
                self.rls.update_classic(&ie.stacked)?;
                (None, 1.0)
            }
        };

        let p_f = model.propagate_covariance(&da.p_da, &v1)?;
        let (x_fc, _) = model.forecast(&da.x_da, d_hat)?;

        self.buffers.commit(d_hat, z, ie.phi, abar);
        self.belief = KalmanBelief {
            x_fc,
            x_da: da.x_da,
            p_f,
            p_da: da.p_da,
            gain: da.gain,
            z,
        };

        let eig = sym_eigenvalues(self.rls.covariance());
        if !d_hat.is_finite() {
            return Err(Error::DegenerateCovariance(format!(
                "derivative estimate diverged at step {}",
                self.steps() - 1
            )));
        }
        Ok(StepDiagnostics {
            d_hat,
            z,
            lambda,
            g,
            eig_max_p: eig[eig.len() - 1],
            eig_min_p: eig[0],
            theta: self.rls.theta().clone(),
            v1_eta,
            v2,
        })
    }
}

/// Runs a fresh estimator over `signal`.
pub fn run(config: &AiseConfig, signal: &[f64]) -> Result<Vec<StepDiagnostics>> {
    if signal.is_empty() {
        return Err(Error::param("signal", "must be nonempty"));
    }
    let mut aise = Aise::new(config.clone())?;
    signal.iter().map(|&y| aise.step(y)).collect()
}
