use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_diff::experiment::bench::threads_from_env;
use adaptive_diff::experiment::csv::{write_file, write_table};
use adaptive_diff::experiment::{
    diff_csv, differentiate, load_signal_csv, noise_for_snr, parse_config, run_benchmark, run_closed_loop, snr_db,
    synth_trajectory, trace_csv, write_signal_csv, ExperimentConfig, Method, SignalTable, TrajectoryKind,
};
use adaptive_diff::{Error, Result};
use clap::{Parser, Subcommand};

/// Adaptive numerical differentiation and PID benchmarking.
#[derive(Parser)]
#[command(name = "adaptive-diff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Differentiate a `t,y` CSV signal.
    Diff {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "aise-vrf-er")]
        method: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Simulate one closed-loop step response and write its trace.
    Pid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// Run without sensor noise.
        #[arg(long)]
        no_noise: bool,
    },
    /// Score methods over seeds 0..N against the noise-free BD response.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "bd,bd-ma,bd-bw,aise,aise-vrf-er")]
        methods: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a noisy synthetic trajectory (`t,y`) and its truth (`t,y,dydt`).
    Synth {
        /// sigmoidLateral, sinusoid or polynomial.
        #[arg(long, default_value = "sigmoidLateral")]
        kind: String,
        #[arg(long, default_value_t = 3000)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        ts: f64,
        #[arg(long, default_value_t = 40.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        key: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Diff { input, config, method, output } => {
            let cfg = load_config(&config)?;
            let method: Method = method.parse()?;
            let signal = load_signal_csv(&input)?;
            let rows = differentiate(&cfg, method, &signal)?;
            write_file(&output, &diff_csv(&rows))
        }
        Command::Pid { config, method, seed, output, no_noise } => {
            let cfg = load_config(&config)?;
            let method: Method = method.parse()?;
            let out = run_closed_loop(&cfg, method, (!no_noise).then_some(seed))?;
            write_file(&output, &trace_csv(&out.trace.rows))
        }
        Command::Bench { config, methods, seeds, output } => {
            let cfg = load_config(&config)?;
            let methods = Method::parse_list(&methods)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let report = run_benchmark(&cfg, &methods, &seeds, threads_from_env())?;
            report.write_to_dir(&output)?;
            for s in report.summaries() {
                println!("{:<12} mean {:.4}  min {:.4}  max {:.4}  ({} runs)", s.method, s.mean, s.min, s.max, s.runs);
            }
            let failed: Vec<_> = report.failures().collect();
            if let Some(first) = failed.first() {
                return Err(Error::RunsFailed(format!(
                    "{} run(s) failed, first {} seed {}: {}",
                    failed.len(),
                    first.method,
                    first.seed,
                    first.outcome.as_ref().err().map_or("", |s| s.as_str())
                )));
            }
            Ok(())
        }
        Command::Synth { kind, steps, ts, snr_db: target, seed, output, truth } => {
            let kind = TrajectoryKind::named(&kind, steps as f64 * ts)?;
            let clean = synth_trajectory(&kind, steps, ts)?;
            let noise = noise_for_snr(&clean.signal.y, target, seed);
            let noisy: Vec<f64> = clean.signal.y.iter().zip(&noise).map(|(y, v)| y + v).collect();
            write_signal_csv(&output, &SignalTable::new(clean.signal.t.clone(), noisy)?)?;
            if let Some(path) = truth {
                let rows: Vec<Vec<f64>> = (0..steps)
                    .map(|k| vec![clean.signal.t[k], clean.signal.y[k], clean.derivative[k]])
                    .collect();
                write_file(&path, &write_table("t,y,dydt", &rows))?;
            }
            eprintln!("measured SNR {:.2} dB", snr_db(&clean.signal.y, &noise)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
