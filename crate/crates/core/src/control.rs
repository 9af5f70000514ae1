//! Sampled-data servo loop: a zero-order-hold first-order-lag-plus-dead-time
//! plant, a digital PID controller with a pluggable derivative source, a
//! piecewise-stationary sensor-noise generator, and RMSE scoring.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::aise::{Aise, AiseConfig, StepDiagnostics};
use crate::baseline::{Bd, BdIir, BdMa, Differentiator};
use crate::error::{Error, Result};

/// `K e^{-θ s} / (τ s + 1)` sampled every `ts` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    pub k_dc: f64,
    pub tau_c: f64,
    pub dead_time: f64,
    pub ts: f64,
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_dc > 0.0 && self.k_dc.is_finite()) {
            return Err(Error::param("K", format!("DC gain must be positive, got {}", self.k_dc)));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(Error::param("tauC", format!("time constant must be positive, got {}", self.tau_c)));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::param("deadTime", format!("must be nonnegative, got {}", self.dead_time)));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::param("Ts", format!("must be positive, got {}", self.ts)));
        }
        let steps = self.dead_time / self.ts;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::param(
                "deadTime",
                format!("must be an integer multiple of Ts, got {} / {} = {steps}", self.dead_time, self.ts),
            ));
        }
        Ok(())
    }
}

/// `y_{k+1} = γ y_k + K (1 - γ) u_{k - nd}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePlant {
    gamma: f64,
    gain: f64,
    delay_steps: usize,
    lag: f64,
    delay_line: VecDeque<f64>,
}

/// Exact discretization of the plant under a zero-order hold.
pub fn zoh_discretize(cfg: &PlantConfig) -> Result<DiscretePlant> {
    cfg.validate()?;
    let gamma = (-cfg.ts / cfg.tau_c).exp();
    let delay_steps = (cfg.dead_time / cfg.ts).round() as usize;
    Ok(DiscretePlant {
        gamma,
        gain: cfg.k_dc * (1.0 - gamma),
        delay_steps,
        lag: 0.0,
        delay_line: VecDeque::from(vec![0.0; delay_steps]),
    })
}

impl DiscretePlant {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Current output `y_k`.
    pub fn output(&self) -> f64 {
        self.lag
    }

    /// Applies `u_k` and returns `y_{k+1}`.
    pub fn step(&mut self, u: f64) -> f64 {
        let delayed = if self.delay_steps == 0 {
            u
        } else {
            self.delay_line.push_back(u);
            self.delay_line.pop_front().unwrap_or(0.0)
        };
        self.lag = self.gamma * self.lag + self.gain * delayed;
        self.lag
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Control split into its three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidOutput {
    pub u: f64,
    pub up: f64,
    pub ui: f64,
    pub ud: f64,
}

/// `u = Kp e + u_i + Kd ė̂` with `u_i,k = u_i,k-1 + Ki Ts e_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    gains: PidGains,
    ts: f64,
    integral: f64,
    prev_error: f64,
}

impl PidController {
    pub fn new(gains: PidGains, ts: f64) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::param("Ts", format!("must be positive, got {ts}")));
        }
        Ok(Self {
            gains,
            ts,
            integral: 0.0,
            prev_error: 0.0,
        })
    }

    /// `d_est` is the derivative estimate of `e` from the configured source.
    pub fn step(&mut self, e: f64, d_est: f64) -> PidOutput {
        self.integral += self.gains.ki * self.ts * self.prev_error;
        self.prev_error = e;
        let up = self.gains.kp * e;
        let ud = self.gains.kd * d_est;
        let ui = self.integral;
        PidOutput { u: up + ui + ud, up, ui, ud }
    }
}

/// Where the D term gets its derivative of the error.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeSource {
    Bd,
    BdMa { window: usize },
    BdBw { order: usize, cutoff: f64 },
    Aise(Box<AiseConfig>),
}

impl DerivativeSource {
    /// A fresh differentiator with zero history.
    pub fn build(&self, ts: f64) -> Result<Box<dyn Differentiator + Send>> {
        Ok(match self {
            DerivativeSource::Bd => Box::new(Bd::new(ts)?),
            DerivativeSource::BdMa { window } => Box::new(BdMa::new(ts, *window)?),
            DerivativeSource::BdBw { order, cutoff } => Box::new(BdIir::butterworth(ts, *order, *cutoff)?),
            DerivativeSource::Aise(cfg) => Box::new(Aise::new((**cfg).clone())?),
        })
    }
}

/// Wraps [`Aise`] and keeps every step's diagnostics.
#[derive(Debug)]
pub struct RecordingAise {
    aise: Aise,
    log: Vec<StepDiagnostics>,
}

impl RecordingAise {
    pub fn new(config: AiseConfig) -> Result<Self> {
        Ok(Self {
            aise: Aise::new(config)?,
            log: Vec::new(),
        })
    }

    pub fn into_log(self) -> Vec<StepDiagnostics> {
        self.log
    }
}

impl Differentiator for RecordingAise {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        let diag = self.aise.step(sample)?;
        let d = diag.d_hat;
        self.log.push(diag);
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSegment {
    pub start: usize,
    pub end: usize,
    pub std_dev: f64,
}

/// Piecewise-constant standard deviation over half-open step ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub segments: Vec<NoiseSegment>,
    pub seed: u64,
}

impl NoiseModel {
    pub fn silent(n: usize) -> Self {
        Self {
            segments: vec![NoiseSegment { start: 0, end: n, std_dev: 0.0 }],
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            segments: self.segments.clone(),
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut next = 0;
        for s in &self.segments {
            if s.start != next {
                return Err(Error::param(
                    "noise.segments",
                    format!("segments must be contiguous from 0, found a gap or overlap at step {}", s.start.min(next)),
                ));
            }
            if s.end <= s.start {
                return Err(Error::param("noise.segments", format!("empty segment {}:{}", s.start, s.end)));
            }
            if !(s.std_dev >= 0.0 && s.std_dev.is_finite()) {
                return Err(Error::param("noise.segments", format!("standard deviation must be nonnegative, got {}", s.std_dev)));
            }
            next = s.end;
        }
        if next < n {
            return Err(Error::param("noise.segments", format!("segments cover steps 0..{next} but the run has {n}")));
        }
        Ok(())
    }

    pub fn std_dev_at(&self, k: usize) -> f64 {
        self.segments
            .iter()
            .find(|s| (s.start..s.end).contains(&k))
            .map_or(0.0, |s| s.std_dev)
    }

    /// Seeded Gaussian sequence whose `k`-th sample has standard deviation
    /// `std_dev_at(k)`.
    pub fn generate(&self, n: usize) -> Result<Vec<f64>> {
        self.validate(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..n)
            .map(|k| {
                let v: f64 = StandardNormal.sample(&mut rng);
                self.std_dev_at(k) * v
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub t: f64,
    pub r: f64,
    pub y: f64,
    pub ym: f64,
    pub e: f64,
    pub u: f64,
    pub up: f64,
    pub ui: f64,
    pub ud: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace {
    pub rows: Vec<TraceRow>,
    pub seed: Option<u64>,
    pub method: String,
}

impl ClosedLoopTrace {
    pub fn outputs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }

    /// First time after which `y` stays within `band · |final|` of the final value.
    pub fn settling_time(&self, band: f64) -> f64 {
        let Some(last) = self.rows.last() else {
            return 0.0;
        };
        let target = last.y;
        let tol = band * target.abs();
        match self.rows.iter().rposition(|r| (r.y - target).abs() > tol) {
            Some(i) if i + 1 < self.rows.len() => self.rows[i + 1].t,
            Some(_) => f64::INFINITY,
            None => 0.0,
        }
    }
}

/// Runs the loop for `command.len()` steps: measure, control, actuate.
pub fn simulate_closed_loop(
    plant_cfg: &PlantConfig,
    gains: PidGains,
    derivative: &mut dyn Differentiator,
    noise: &[f64],
    command: &[f64],
) -> Result<Vec<TraceRow>> {
    if noise.len() < command.len() {
        return Err(Error::LengthMismatch {
            left: noise.len(),
            right: command.len(),
        });
    }
    let mut plant = zoh_discretize(plant_cfg)?;
    let mut pid = PidController::new(gains, plant_cfg.ts)?;
    let mut rows = Vec::with_capacity(command.len());
    for (k, (&r, &v)) in command.iter().zip(noise).enumerate() {
        let y = plant.output();
        let ym = y + v;
        let e = r - ym;
        let d = derivative.differentiate(e)?;
        let out = pid.step(e, d);
        plant.step(out.u);
        rows.push(TraceRow {
            k,
            t: k as f64 * plant_cfg.ts,
            r,
            y,
            ym,
            e,
            u: out.u,
            up: out.up,
            ui: out.ui,
            ud: out.ud,
        });
    }
    Ok(rows)
}

/// `sqrt(mean((y - ȳ)²))`.
pub fn rmse(y: &[f64], y_ref: &[f64]) -> Result<f64> {
    if y.len() != y_ref.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: y_ref.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::param("y", "must be nonempty"));
    }
    let ss: f64 = y.iter().zip(y_ref).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / y.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_plant() -> PlantConfig {
        PlantConfig { k_dc: 1.0, tau_c: 1.0, dead_time: 1.0, ts: 0.01 }
    }

    #[test]
    fn zoh_example_values() {
        let p = zoh_discretize(&example_plant()).unwrap();
        // e^{-0.01} to 16 digits
        assert!((p.gamma() - 0.990_049_833_749_168_1).abs() < 1e-15);
        assert!((p.gain() - 0.009_950_166_250_831_9).abs() < 1e-15);
        assert_eq!(p.delay_steps(), 100);
        let p = zoh_discretize(&PlantConfig { dead_time: 0.0, ..example_plant() }).unwrap();
        assert_eq!(p.delay_steps(), 0);
        assert!(zoh_discretize(&PlantConfig { dead_time: 0.015, ..example_plant() }).is_err());
        assert!(zoh_discretize(&PlantConfig { tau_c: 0.0, ..example_plant() }).is_err());
    }

    #[test]
    fn plant_responses() {
        let mut p = zoh_discretize(&example_plant()).unwrap();
        assert!((0..500).all(|_| p.step(0.0) == 0.0));

        let mut p = zoh_discretize(&PlantConfig { dead_time: 0.0, ..example_plant() }).unwrap();
        let mut y = 0.0;
        for _ in 0..5000 {
            y = p.step(1.0);
        }
        assert!((y - 1.0).abs() < 1e-12);

        // call k returns y_{k+1}
        let mut p = zoh_discretize(&example_plant()).unwrap();
        let out: Vec<f64> = (0..300).map(|_| p.step(1.0)).collect();
        assert!(out[..100].iter().all(|&v| v == 0.0));
        assert!(out[100] > 0.0);
    }

    #[test]
    fn plant_linearity() {
        let mut a = zoh_discretize(&example_plant()).unwrap();
        let mut b = zoh_discretize(&example_plant()).unwrap();
        for k in 0..1000 {
            let u = (k as f64 * 0.037).sin() + 0.3;
            let ya = a.step(u);
            let yb = b.step(-2.5 * u);
            assert!((yb + 2.5 * ya).abs() < 1e-12);
        }
    }

    #[test]
    fn pid_terms() {
        let gains = PidGains { kp: 1.5, ki: 1.0, kd: 0.25 };
        let mut pid = PidController::new(gains, 0.01).unwrap();
        assert!((0..10).all(|_| pid.step(0.0, 0.0).u == 0.0));

        let mut pid = PidController::new(gains, 0.01).unwrap();
        for k in 0..20 {
            let out = pid.step(1.0, 0.0);
            assert_eq!(out.up, 1.5);
            assert!((out.ui - 0.01 * k as f64).abs() < 1e-12);
        }

        let mut pid = PidController::new(gains, 0.01).unwrap();
        let mut bd = Bd::new(0.01).unwrap();
        bd.differentiate(0.0).unwrap();
        for k in 1..10 {
            let e = k as f64 * 0.01;
            let d = bd.differentiate(e).unwrap();
            assert!((pid.step(e, d).ud - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_generation() {
        let m = NoiseModel::silent(100);
        assert!(m.generate(100).unwrap().iter().all(|&v| v == 0.0));

        let m = NoiseModel {
            segments: vec![
                NoiseSegment { start: 0, end: 2000, std_dev: 1.5 },
                NoiseSegment { start: 2000, end: 3501, std_dev: 1.0 },
            ],
            seed: 17,
        };
        let a = m.generate(3501).unwrap();
        assert_eq!(a, m.generate(3501).unwrap());
        assert_ne!(a, m.with_seed(18).generate(3501).unwrap());
        let std = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
        };
        assert!((std(&a[..2000]) / 1.5 - 1.0).abs() < 0.05);
        assert!((std(&a[2000..]) / 1.0 - 1.0).abs() < 0.05);

        let gap = NoiseModel {
            segments: vec![
                NoiseSegment { start: 0, end: 10, std_dev: 1.0 },
                NoiseSegment { start: 12, end: 20, std_dev: 1.0 },
            ],
            seed: 0,
        };
        assert!(gap.generate(20).is_err());
        assert!(NoiseModel::silent(10).generate(20).is_err());
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.5, 2.5, 0.5], &[1.0, 2.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        let y = [0.3, -1.2, 2.0, 0.7];
        let r = [0.1, -1.0, 1.0, 0.0];
        let direct = ((0.04 + 0.04 + 1.0 + 0.49) / 4.0f64).sqrt();
        assert!((rmse(&y, &r).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn zero_command_zero_trace() {
        let n = 500;
        let mut bd = Bd::new(0.01).unwrap();
        let rows = simulate_closed_loop(&example_plant(), PidGains { kp: 1.5, ki: 1.0, kd: 0.25 }, &mut bd, &vec![0.0; n], &vec![0.0; n]).unwrap();
        assert!(rows.iter().all(|r| r.y == 0.0 && r.u == 0.0));
        assert!(rows.iter().enumerate().all(|(k, r)| r.k == k && (r.t - k as f64 * 0.01).abs() < 1e-12));
    }
}
