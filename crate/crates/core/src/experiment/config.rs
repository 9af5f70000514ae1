//! Flat `group.key = value` experiment files.
//!
//! ```text
//! # comments run to end of line
//! aise.nE = 12
//! aise.Rtheta = 10^-0.1
//! bw.cutoff = 0.6pi
//! noise.segments = 0:2000:1.5; 2000:3501:1.0
//! ```
//!
//! Numbers accept plain floats, `10^x`, and a trailing `pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::adaptation::AdaptConfig;
use crate::aise::{AiseConfig, Forgetting};
use crate::control::{DerivativeSource, NoiseModel, NoiseSegment, PidGains, PlantConfig};
use crate::error::{Error, Result};
use crate::input_estimation::IeConfig;
use crate::kalman::LtiModel;
use crate::rls::{ErConfig, VrfConfig};

/// Keys every file must carry.
pub const REQUIRED_KEYS: &[&str] = &[
    "aise.nE",
    "aise.nF",
    "aise.Rz",
    "aise.Rd",
    "aise.Rtheta",
    "adapt.etaL",
    "adapt.etaU",
    "adapt.beta",
    "vrf.eta",
    "vrf.tauN",
    "vrf.tauD",
    "vrf.alpha",
    "er.Rinf",
];

/// The closed-loop block: all of these or none.
pub const LOOP_KEYS: &[&str] = &[
    "plant.K",
    "plant.tauC",
    "plant.deadTime",
    "plant.Ts",
    "pid.Kp",
    "pid.Ki",
    "pid.Kd",
    "noise.segments",
];

/// Optional keys and their defaults.
pub const OPTIONAL_KEYS: &[(&str, &str)] = &[
    ("adapt.gridSize", "50"),
    ("ma.window", "10"),
    ("bw.order", "5"),
    ("bw.cutoff", "0.6pi"),
    ("sim.steps", "3501"),
    ("sim.command", "1"),
];

/// Derivative source selector shared by the `diff`, `pid` and `bench` commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bd,
    BdMa,
    BdBw,
    Aise,
    AiseVrfEr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bd, Method::BdMa, Method::BdBw, Method::Aise, Method::AiseVrfEr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bd => "bd",
            Method::BdMa => "bd-ma",
            Method::BdBw => "bd-bw",
            Method::Aise => "aise",
            Method::AiseVrfEr => "aise-vrf-er",
        }
    }

    pub fn is_aise(self) -> bool {
        matches!(self, Method::Aise | Method::AiseVrfEr)
    }

    /// Parses a comma-separated list, keeping the given order and dropping repeats.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::config("methods", "no methods given"));
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::config("method", format!("unknown method `{s}`, expected one of {}", names.join(", ")))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorParams {
    pub n_e: usize,
    pub n_f: usize,
    pub r_z: f64,
    pub r_d: f64,
    /// `Rθ = r_theta · I`.
    pub r_theta: f64,
    pub eta_l: f64,
    pub eta_u: f64,
    pub beta: f64,
    pub grid_size: usize,
    pub vrf: VrfConfig,
    /// `R∞ = r_inf · I`.
    pub r_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopParams {
    pub plant: PlantConfig,
    pub gains: PidGains,
    pub noise: Vec<NoiseSegment>,
    pub steps: usize,
    pub command: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub estimator: EstimatorParams,
    pub ma_window: usize,
    pub bw_order: usize,
    pub bw_cutoff: f64,
    pub closed_loop: Option<LoopParams>,
}

impl ExperimentConfig {
    pub fn aise_config(&self, forgetting: bool, ts: f64) -> Result<AiseConfig> {
        let p = &self.estimator;
        let ie = IeConfig::new(p.n_e, p.n_f, p.r_z, p.r_d, p.r_theta).map_err(|e| scoped("aise", e))?;
        let adapt = AdaptConfig::new(p.eta_l, p.eta_u, p.beta, p.grid_size).map_err(|e| scoped("adapt", e))?;
        let forgetting = if forgetting {
            Forgetting::VrfEr {
                vrf: p.vrf,
                er: ErConfig::scaled_identity(ie.theta_dim(), p.r_inf).map_err(|e| scoped("er", e))?,
            }
        } else {
            Forgetting::None
        };
        Ok(AiseConfig {
            model: LtiModel::differentiator(ts)?,
            ie,
            adapt,
            forgetting,
        })
    }

    pub fn derivative_source(&self, method: Method, ts: f64) -> Result<DerivativeSource> {
        Ok(match method {
            Method::Bd => DerivativeSource::Bd,
            Method::BdMa => DerivativeSource::BdMa { window: self.ma_window },
            Method::BdBw => DerivativeSource::BdBw {
                order: self.bw_order,
                cutoff: self.bw_cutoff,
            },
            Method::Aise => DerivativeSource::Aise(Box::new(self.aise_config(false, ts)?)),
            Method::AiseVrfEr => DerivativeSource::Aise(Box::new(self.aise_config(true, ts)?)),
        })
    }

    /// The closed-loop block, or an error naming its keys.
    pub fn require_loop(&self) -> Result<&LoopParams> {
        self.closed_loop
            .as_ref()
            .ok_or_else(|| Error::MissingKeys(LOOP_KEYS.iter().map(|k| k.to_string()).collect()))
    }

    pub fn noise_model(&self, seed: u64) -> Result<NoiseModel> {
        Ok(NoiseModel {
            segments: self.require_loop()?.noise.clone(),
            seed,
        })
    }

    /// Writes every key, defaults included; `parse_config` reads it back unchanged.
    pub fn serialize(&self) -> String {
        let p = &self.estimator;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("aise.nE", p.n_e.to_string());
        kv("aise.nF", p.n_f.to_string());
        kv("aise.Rz", fmt_num(p.r_z));
        kv("aise.Rd", fmt_num(p.r_d));
        kv("aise.Rtheta", fmt_num(p.r_theta));
        kv("adapt.etaL", fmt_num(p.eta_l));
        kv("adapt.etaU", fmt_num(p.eta_u));
        kv("adapt.beta", fmt_num(p.beta));
        kv("adapt.gridSize", p.grid_size.to_string());
        kv("vrf.eta", fmt_num(p.vrf.eta));
        kv("vrf.tauN", p.vrf.tau_n.to_string());
        kv("vrf.tauD", p.vrf.tau_d.to_string());
        kv("vrf.alpha", fmt_num(p.vrf.alpha));
        kv("er.Rinf", fmt_num(p.r_inf));
        kv("ma.window", self.ma_window.to_string());
        kv("bw.order", self.bw_order.to_string());
        kv("bw.cutoff", fmt_num(self.bw_cutoff));
        if let Some(l) = &self.closed_loop {
            kv("plant.K", fmt_num(l.plant.k_dc));
            kv("plant.tauC", fmt_num(l.plant.tau_c));
            kv("plant.deadTime", fmt_num(l.plant.dead_time));
            kv("plant.Ts", fmt_num(l.plant.ts));
            kv("pid.Kp", fmt_num(l.gains.kp));
            kv("pid.Ki", fmt_num(l.gains.ki));
            kv("pid.Kd", fmt_num(l.gains.kd));
            let segs: Vec<String> = l
                .noise
                .iter()
                .map(|g| format!("{}:{}:{}", g.start, g.end, fmt_num(g.std_dev)))
                .collect();
            kv("noise.segments", segs.join("; "));
            kv("sim.steps", l.steps.to_string());
            kv("sim.command", fmt_num(l.command));
        }
        s
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Re-tags a component's parameter error with its config key.
fn scoped(group: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => Error::config(format!("{group}.{name}"), reason),
        other => other,
    }
}

/// Plain float, `B^x`, or a multiple of π (`0.6pi`, `pi`).
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let scale = if head.is_empty() { 1.0 } else { parse_number(head)? };
        return Some(scale * PI);
    }
    if let Some((base, exp)) = s.split_once('^') {
        let base: f64 = base.trim().parse().ok()?;
        let exp: f64 = exp.trim().parse().ok()?;
        return Some(base.powf(exp));
    }
    s.parse().ok()
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
    missing: Vec<String>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        if let Some(v) = self.map.get(key) {
            return Some(v.clone());
        }
        if let Some((_, d)) = OPTIONAL_KEYS.iter().find(|(k, _)| *k == key) {
            return Some((d.to_string(), 0));
        }
        self.missing.push(key.to_string());
        None
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        let Some((v, _)) = self.raw(key) else {
            return Ok(f64::NAN);
        };
        match parse_number(&v) {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(Error::config(key, format!("expected a finite number, got `{v}`"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let Some((v, _)) = self.raw(key) else {
            return Ok(0);
        };
        v.trim()
            .parse()
            .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`")))
    }

    fn segments(&mut self, key: &str) -> Result<Vec<NoiseSegment>> {
        let Some((v, _)) = self.raw(key) else {
            return Ok(Vec::new());
        };
        let bad = || Error::config(key, format!("expected `start:end:D2; …`, got `{v}`"));
        v.split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|part| {
                let f: Vec<&str> = part.split(':').map(str::trim).collect();
                let [start, end, d2] = f[..] else {
                    return Err(bad());
                };
                Ok(NoiseSegment {
                    start: start.parse().map_err(|_| bad())?,
                    end: end.parse().map_err(|_| bad())?,
                    std_dev: parse_number(d2).ok_or_else(bad)?,
                })
            })
            .collect()
    }
}

fn known_key(key: &str) -> bool {
    REQUIRED_KEYS.contains(&key) || LOOP_KEYS.contains(&key) || OPTIONAL_KEYS.iter().any(|(k, _)| *k == key)
}

/// Parses and validates an experiment file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(line, format!("line {lineno}: expected `key = value`")));
        };
        let (k, v) = (k.trim(), v.trim());
        if !known_key(k) {
            return Err(Error::config(k, format!("unknown key on line {lineno}")));
        }
        if let Some((_, first)) = map.insert(k.to_string(), (v.to_string(), lineno)) {
            return Err(Error::config(k, format!("set twice, on lines {first} and {lineno}")));
        }
    }

    let has_loop = LOOP_KEYS.iter().chain(["sim.steps", "sim.command"].iter()).any(|k| map.contains_key(*k));
    let mut e = Entries { map, missing: Vec::new() };

    let n_e = e.count("aise.nE")?;
    let n_f = e.count("aise.nF")?;
    let r_z = e.num("aise.Rz")?;
    let r_d = e.num("aise.Rd")?;
    let r_theta = e.num("aise.Rtheta")?;
    let eta_l = e.num("adapt.etaL")?;
    let eta_u = e.num("adapt.etaU")?;
    let beta = e.num("adapt.beta")?;
    let grid_size = e.count("adapt.gridSize")?;
    let vrf_eta = e.num("vrf.eta")?;
    let tau_n = e.count("vrf.tauN")?;
    let tau_d = e.count("vrf.tauD")?;
    let alpha = e.num("vrf.alpha")?;
    let r_inf = e.num("er.Rinf")?;
    let ma_window = e.count("ma.window")?;
    let bw_order = e.count("bw.order")?;
    let bw_cutoff = e.num("bw.cutoff")?;

    let closed_loop = if has_loop {
        let plant = PlantConfig {
            k_dc: e.num("plant.K")?,
            tau_c: e.num("plant.tauC")?,
            dead_time: e.num("plant.deadTime")?,
            ts: e.num("plant.Ts")?,
        };
        let gains = PidGains {
            kp: e.num("pid.Kp")?,
            ki: e.num("pid.Ki")?,
            kd: e.num("pid.Kd")?,
        };
        let noise = e.segments("noise.segments")?;
        let steps = e.count("sim.steps")?;
        let command = e.num("sim.command")?;
        Some(LoopParams {
            plant,
            gains,
            noise,
            steps,
            command,
        })
    } else {
        None
    };

    if !e.missing.is_empty() {
        return Err(Error::MissingKeys(e.missing));
    }

    let vrf = VrfConfig::new(vrf_eta, tau_n, tau_d, alpha).map_err(|e| scoped("vrf", e))?;
    crate::rls::vrf_constants(tau_n, tau_d).map_err(|e| scoped("vrf", e))?;
    if !(r_inf > 0.0) {
        return Err(Error::config("er.Rinf", format!("must be positive, got {r_inf}")));
    }
    if ma_window == 0 {
        return Err(Error::config("ma.window", "must be at least 1"));
    }
    if bw_order == 0 {
        return Err(Error::config("bw.order", "must be at least 1"));
    }
    if !(bw_cutoff > 0.0 && bw_cutoff < PI) {
        return Err(Error::config("bw.cutoff", format!("must lie in (0, pi) rad/sample, got {bw_cutoff}")));
    }

    let cfg = ExperimentConfig {
        estimator: EstimatorParams {
            n_e,
            n_f,
            r_z,
            r_d,
            r_theta,
            eta_l,
            eta_u,
            beta,
            grid_size,
            vrf,
            r_inf,
        },
        ma_window,
        bw_order,
        bw_cutoff,
        closed_loop,
    };
    // component validation, with errors mapped back to keys
    cfg.aise_config(true, 1.0)?;
    if let Some(l) = &cfg.closed_loop {
        l.plant.validate().map_err(|e| scoped("plant", e))?;
        if l.steps == 0 {
            return Err(Error::config("sim.steps", "must be at least 1"));
        }
        NoiseModel {
            segments: l.noise.clone(),
            seed: 0,
        }
        .validate(l.steps)
        .map_err(|e| match e {
            Error::InvalidParameter { reason, .. } => Error::config("noise.segments", reason),
            other => other,
        })?;
    }
    Ok(cfg)
}
