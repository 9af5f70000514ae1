//! Step-response RMSE of the PID loop for every derivative source, averaged
//! over seeds.
//!
//! cargo run --release --example pid_benchmark [-- SEEDS]

use adaptive_diff::experiment::{parse_config, run_benchmark, Method};

fn main() -> adaptive_diff::Result<()> {
    let cfg = parse_config(include_str!("../../../configs/example1.conf"))?;
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seeds: Vec<u64> = (0..seeds).collect();

    let report = run_benchmark(&cfg, &Method::ALL, &seeds, None)?;
    println!("{:<12} {:>8} {:>8} {:>8}", "method", "mean", "min", "max");
    for s in report.summaries() {
        println!("{:<12} {:8.4} {:8.4} {:8.4}", s.method.name(), s.mean, s.min, s.max);
    }
    for r in report.failures() {
        println!("failed: {} seed {}: {:?}", r.method, r.seed, r.outcome);
    }
    Ok(())
}
