//! Config files, CSV I/O, synthetic signals and the benchmark runner behind
//! the `adaptive-diff` binary.

pub mod bench;
pub mod config;
pub mod csv;
pub mod synth;

pub use bench::{
    diagnostics_csv, diff_csv, differentiate, reference_trace, run_benchmark, run_closed_loop, trace_csv,
    BenchReport, DiffRow, MethodSummary, RunOutput, RunRecord,
};
pub use config::{parse_config, ExperimentConfig, Method};
pub use csv::{load_signal_csv, write_signal_csv, SignalTable};
pub use synth::{noise_for_snr, snr_db, synth_trajectory, Trajectory, TrajectoryKind};
