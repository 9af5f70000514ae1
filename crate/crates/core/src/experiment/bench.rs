//! Single runs and the seeded multi-method benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::aise::StepDiagnostics;
use crate::baseline::Differentiator;
use crate::control::{rmse, simulate_closed_loop, ClosedLoopTrace, DerivativeSource, RecordingAise, TraceRow};
use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Method};
use super::csv::{fmt_f64, write_file, write_table, SignalTable, DIFF_HEADER, REPORT_HEADER, TRACE_HEADER};

/// Caps benchmark parallelism when set to a positive integer.
pub const THREADS_ENV: &str = "ADAPTIVE_DIFF_THREADS";

/// A closed-loop trace plus per-step estimator diagnostics for AISE methods.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: ClosedLoopTrace,
    pub diagnostics: Option<Vec<StepDiagnostics>>,
}

/// Unit step response with the configured loop; `seed = None` runs noise-free.
pub fn run_closed_loop(cfg: &ExperimentConfig, method: Method, seed: Option<u64>) -> Result<RunOutput> {
    let lp = cfg.require_loop()?;
    let n = lp.steps;
    let noise = match seed {
        Some(s) => cfg.noise_model(s)?.generate(n)?,
        None => vec![0.0; n],
    };
    let command = vec![lp.command; n];
    let ts = lp.plant.ts;
    let (rows, diagnostics) = match cfg.derivative_source(method, ts)? {
        DerivativeSource::Aise(aise_cfg) => {
            let mut rec = RecordingAise::new(*aise_cfg)?;
            let rows = simulate_closed_loop(&lp.plant, lp.gains, &mut rec, &noise, &command)?;
            (rows, Some(rec.into_log()))
        }
        src => {
            let mut d = src.build(ts)?;
            (simulate_closed_loop(&lp.plant, lp.gains, d.as_mut(), &noise, &command)?, None)
        }
    };
    Ok(RunOutput {
        trace: ClosedLoopTrace {
            rows,
            seed,
            method: method.name().to_string(),
        },
        diagnostics,
    })
}

/// Noise-free BD loop: the ground truth for RMSE scoring.
pub fn reference_trace(cfg: &ExperimentConfig) -> Result<ClosedLoopTrace> {
    Ok(run_closed_loop(cfg, Method::Bd, None)?.trace)
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.k as f64, r.t, r.r, r.y, r.ym, r.e, r.u, r.up, r.ui, r.ud])
        .collect();
    write_table(TRACE_HEADER, &table)
}

/// One output row of the `diff` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffRow {
    pub t: f64,
    pub y: f64,
    pub d_hat: f64,
    /// 1 for methods without forgetting.
    pub lambda: f64,
    /// NaN for the non-adaptive baselines.
    pub eig_max_p: f64,
}

/// Differentiates a uniformly sampled signal with any method.
pub fn differentiate(cfg: &ExperimentConfig, method: Method, signal: &SignalTable) -> Result<Vec<DiffRow>> {
    let ts = signal
        .ts()
        .ok_or_else(|| Error::Csv { line: 2, reason: "need at least two samples to infer Ts".into() })?;
    let rows = |d: &[f64], lam: &dyn Fn(usize) -> (f64, f64)| -> Vec<DiffRow> {
        (0..signal.len())
            .map(|k| {
                let (lambda, eig_max_p) = lam(k);
                DiffRow {
                    t: signal.t[k],
                    y: signal.y[k],
                    d_hat: d[k],
                    lambda,
                    eig_max_p,
                }
            })
            .collect()
    };
    match cfg.derivative_source(method, ts)? {
        DerivativeSource::Aise(aise_cfg) => {
            let diag = crate::aise::run(&aise_cfg, &signal.y)?;
            let d: Vec<f64> = diag.iter().map(|s| s.d_hat).collect();
            Ok(rows(&d, &|k| (diag[k].lambda, diag[k].eig_max_p)))
        }
        src => {
            let mut diff = src.build(ts)?;
            let d = signal.y.iter().map(|&y| diff.differentiate(y)).collect::<Result<Vec<_>>>()?;
            Ok(rows(&d, &|_| (1.0, f64::NAN)))
        }
    }
}

pub fn diff_csv(rows: &[DiffRow]) -> String {
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.t, r.y, r.d_hat, r.lambda, r.eig_max_p]).collect();
    write_table(DIFF_HEADER, &table)
}

/// `k,lambda,g,eigmaxP,eigminP,etaK,V2,theta_0,…`; `g` is NaN while the test is inactive.
pub fn diagnostics_csv(diag: &[StepDiagnostics]) -> String {
    let l = diag.first().map_or(0, |d| d.theta.len());
    let mut header = String::from("k,lambda,g,eigmaxP,eigminP,etaK,V2");
    for i in 0..l {
        let _ = write!(header, ",theta_{i}");
    }
    let table: Vec<Vec<f64>> = diag
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut row = vec![k as f64, d.lambda, d.g.unwrap_or(f64::NAN), d.eig_max_p, d.eig_min_p, d.v1_eta, d.v2];
            row.extend(d.theta.iter());
            row
        })
        .collect();
    write_table(&header, &table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    /// RMSE against the reference, or the failure message.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Benchmark results, ordered by method (as requested) then seed.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub methods: Vec<Method>,
    pub records: Vec<RunRecord>,
    pub reference: ClosedLoopTrace,
    /// Trace of the lowest seed per method.
    pub sample_traces: BTreeMap<Method, ClosedLoopTrace>,
    /// Estimator diagnostics of the lowest seed per AISE method.
    pub sample_diagnostics: BTreeMap<Method, Vec<StepDiagnostics>>,
}

impl BenchReport {
    pub fn summaries(&self) -> Vec<MethodSummary> {
        self.methods
            .iter()
            .map(|&m| {
                let ok: Vec<f64> = self
                    .records
                    .iter()
                    .filter(|r| r.method == m)
                    .filter_map(|r| r.outcome.as_ref().ok().copied())
                    .collect();
                let total = self.records.iter().filter(|r| r.method == m).count();
                let (mean, min, max) = if ok.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    (
                        ok.iter().sum::<f64>() / ok.len() as f64,
                        ok.iter().copied().fold(f64::INFINITY, f64::min),
                        ok.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    )
                };
                MethodSummary {
                    method: m,
                    mean,
                    min,
                    max,
                    runs: ok.len(),
                    failures: total - ok.len(),
                }
            })
            .collect()
    }

    pub fn mean_rmse(&self, method: Method) -> Option<f64> {
        self.summaries().into_iter().find(|s| s.method == method).map(|s| s.mean)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.outcome.is_err())
    }

    /// `method,seed,rmse`; failed runs carry `NaN`.
    pub fn report_csv(&self) -> String {
        let mut s = format!("{REPORT_HEADER}\n");
        for r in &self.records {
            let v = r.outcome.as_ref().map_or(f64::NAN, |v| *v);
            let _ = writeln!(s, "{},{},{}", r.method, r.seed, fmt_f64(v));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,mean,min,max,runs,failures\n");
        for m in self.summaries() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                m.method,
                fmt_f64(m.mean),
                fmt_f64(m.min),
                fmt_f64(m.max),
                m.runs,
                m.failures
            );
        }
        s
    }

    pub fn failures_csv(&self) -> String {
        let mut s = String::from("method,seed,error\n");
        for r in self.failures() {
            if let Err(e) = &r.outcome {
                let _ = writeln!(s, "{},{},\"{}\"", r.method, r.seed, e.replace('"', "'"));
            }
        }
        s
    }

    /// Writes `report.csv`, `summary.csv`, `failures.csv`, `reference.csv`,
    /// `trace_<method>.csv` and `diagnostics_<method>.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("report.csv"), &self.report_csv())?;
        write_file(&dir.join("summary.csv"), &self.summary_csv())?;
        write_file(&dir.join("failures.csv"), &self.failures_csv())?;
        write_file(&dir.join("reference.csv"), &trace_csv(&self.reference.rows))?;
        for (m, t) in &self.sample_traces {
            write_file(&dir.join(format!("trace_{m}.csv")), &trace_csv(&t.rows))?;
        }
        for (m, d) in &self.sample_diagnostics {
            write_file(&dir.join(format!("diagnostics_{m}.csv")), &diagnostics_csv(d))?;
        }
        Ok(())
    }
}

/// Positive integer from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Every `method × seed` closed loop scored against the noise-free BD trace.
///
/// Runs execute in parallel on a private pool of `threads` workers (all
/// cores when `None`); results are merged in `(method, seed)` order, so the
/// report does not depend on scheduling. A failed run is recorded and the
/// others proceed.
pub fn run_benchmark(cfg: &ExperimentConfig, methods: &[Method], seeds: &[u64], threads: Option<usize>) -> Result<BenchReport> {
    let reference = reference_trace(cfg)?;
    let y_ref = reference.outputs();
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();

    let jobs: Vec<(Method, u64)> = methods.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    let first_seed = seeds.first().copied();
    let work = || {
        jobs.par_iter()
            .map(|&(method, seed)| {
                let run = run_closed_loop(cfg, method, Some(seed));
                let outcome = run
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|r| rmse(&r.trace.outputs(), &y_ref).map_err(|e| e.to_string()));
                let keep = (Some(seed) == first_seed).then_some(run.ok()).flatten();
                (RunRecord { method, seed, outcome }, keep)
            })
            .collect::<Vec<_>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))?;
    let results = pool.install(work);

    let mut records = Vec::with_capacity(results.len());
    let mut sample_traces = BTreeMap::new();
    let mut sample_diagnostics = BTreeMap::new();
    for (rec, keep) in results {
        if let Some(out) = keep {
            if let Some(d) = out.diagnostics {
                sample_diagnostics.insert(rec.method, d);
            }
            sample_traces.insert(rec.method, out.trace);
        }
        records.push(rec);
    }
    Ok(BenchReport {
        methods: methods.to_vec(),
        records,
        reference,
        sample_traces,
        sample_diagnostics,
    })
}
