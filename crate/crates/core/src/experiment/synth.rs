//! Smooth test trajectories with closed-form derivatives, and SNR-targeted
//! corruption.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::csv::SignalTable;

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryKind {
    /// Logistic lane change `a / (1 + e^{-(t - t0)/w})`.
    SigmoidLateral { amplitude: f64, center: f64, width: f64 },
    /// `a sin(2π f t)`.
    Sinusoid { amplitude: f64, freq_hz: f64 },
    /// `Σ c_i t^i`, lowest power first.
    Polynomial { coeffs: Vec<f64> },
}

impl TrajectoryKind {
    /// Defaults by name: a 3.5 m lane change of width 0.6 s centered in the
    /// run, a unit 1 Hz sine, or `t²`.
    pub fn named(name: &str, duration: f64) -> Result<Self> {
        match name {
            "sigmoidLateral" => Ok(TrajectoryKind::SigmoidLateral {
                amplitude: 3.5,
                center: duration / 2.0,
                width: 0.6,
            }),
            "sinusoid" => Ok(TrajectoryKind::Sinusoid {
                amplitude: 1.0,
                freq_hz: 1.0,
            }),
            "polynomial" => Ok(TrajectoryKind::Polynomial {
                coeffs: vec![0.0, 0.0, 1.0],
            }),
            other => Err(Error::config(
                "kind",
                format!("unknown trajectory `{other}`, expected sigmoidLateral, sinusoid or polynomial"),
            )),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TrajectoryKind::SigmoidLateral { amplitude, center, width } => amplitude * logistic((t - center) / width),
            TrajectoryKind::Sinusoid { amplitude, freq_hz } => amplitude * (TAU * freq_hz * t).sin(),
            TrajectoryKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TrajectoryKind::SigmoidLateral { amplitude, center, width } => {
                let s = logistic((t - center) / width);
                amplitude * s * (1.0 - s) / width
            }
            TrajectoryKind::Sinusoid { amplitude, freq_hz } => amplitude * TAU * freq_hz * (TAU * freq_hz * t).cos(),
            TrajectoryKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Noise-free samples with their exact derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub signal: SignalTable,
    pub derivative: Vec<f64>,
}

pub fn synth_trajectory(kind: &TrajectoryKind, n: usize, ts: f64) -> Result<Trajectory> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::param("Ts", format!("must be positive, got {ts}")));
    }
    let t: Vec<f64> = (0..n).map(|k| k as f64 * ts).collect();
    let y = t.iter().map(|&t| kind.value(t)).collect();
    let derivative = t.iter().map(|&t| kind.derivative(t)).collect();
    Ok(Trajectory {
        signal: SignalTable::new(t, y)?,
        derivative,
    })
}

/// `10 log10(Σ s² / Σ v²)`; `+∞` for zero noise power.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64> {
    if signal.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: noise.len(),
        });
    }
    let ps: f64 = signal.iter().map(|s| s * s).sum();
    let pn: f64 = noise.iter().map(|v| v * v).sum();
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pn).log10())
}

/// White Gaussian noise whose standard deviation gives `snr_db` against the
/// mean power of `signal`. The realized SNR varies with the draw.
pub fn noise_for_snr(signal: &[f64], snr_db: f64, seed: u64) -> Vec<f64> {
    let power = signal.iter().map(|s| s * s).sum::<f64>() / signal.len().max(1) as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..signal.len())
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            sigma * v
        })
        .collect()
}
