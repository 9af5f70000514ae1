//! Real-time adaptive numerical differentiation.
//!
//! The crate provides two causal differentiators built on adaptive input and
//! state estimation:
//!
//! * **AISE**: a Kalman filter whose unknown input (the derivative) is
//!   reconstructed by an input-estimation subsystem whose coefficients are
//!   tuned online by recursive least squares on a retrospective cost, with
//!   the process and sensor noise covariances adapted every step.
//! * **AISE/VRF-ER**: the same estimator, with RLS replaced by RLS with
//!   variable-rate forgetting (an F-test on residual-error windows) and
//!   exponential resetting of the covariance toward a fixed matrix.
//!
//! Around the estimator sit the baseline differentiators (backward
//! difference, moving average, Butterworth), a sampled-data PID loop around a
//! first-order-lag-plus-dead-time plant, and an experiment layer (config
//! files, CSV I/O, benchmark runner) used by the `adaptive-diff` binary.
//!
//! The runnable programs under `examples/` walk through each capability:
//!
//! ```bash
//! cargo run --release -p adaptive-diff --example differentiate_signal
//! cargo run --release -p adaptive-diff --example pid_benchmark
//! ```

pub mod adaptation;
pub mod aise;
pub mod baseline;
pub mod control;
pub mod error;
pub mod experiment;
pub mod input_estimation;
pub mod kalman;
pub mod linalg;
pub mod rls;

pub use aise::{Aise, AiseConfig, Forgetting, StepDiagnostics};
pub use error::{Error, Result};
pub use kalman::LtiModel;
