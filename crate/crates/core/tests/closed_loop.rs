use std::path::PathBuf;
use std::time::Instant;

use adaptive_diff::control::rmse;
use adaptive_diff::experiment::{parse_config, reference_trace, run_closed_loop, ExperimentConfig, Method};

fn example1() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/example1.conf");
    parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn trace_has_one_row_per_step() {
    let cfg = example1();
    let n = cfg.closed_loop.as_ref().unwrap().steps;
    for m in Method::ALL {
        let out = run_closed_loop(&cfg, m, Some(0)).unwrap();
        assert_eq!(out.trace.rows.len(), n);
        assert_eq!(out.diagnostics.map(|d| d.len()), m.is_aise().then_some(n));
        assert!(out.trace.rows.iter().enumerate().all(|(k, r)| r.k == k && r.e == r.r - r.ym));
    }
}

#[test]
fn noise_free_bd_is_the_reference() {
    let cfg = example1();
    let reference = reference_trace(&cfg).unwrap();
    let a = run_closed_loop(&cfg, Method::Bd, None).unwrap().trace;
    assert_eq!(a.rows, reference.rows);
    assert!(a.rows.iter().all(|r| r.y == r.ym));
}

#[test]
fn noisy_runs_are_seed_deterministic() {
    let cfg = example1();
    let a = run_closed_loop(&cfg, Method::AiseVrfEr, Some(5)).unwrap();
    let b = run_closed_loop(&cfg, Method::AiseVrfEr, Some(5)).unwrap();
    let c = run_closed_loop(&cfg, Method::AiseVrfEr, Some(6)).unwrap();
    assert_eq!(a.trace.rows, b.trace.rows);
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_ne!(a.trace.rows, c.trace.rows);
}

#[test]
fn zero_noise_rmse_against_reference() {
    let cfg = example1();
    let y_ref = reference_trace(&cfg).unwrap().outputs();
    let mut worst = Vec::new();
    for m in Method::ALL {
        let y = run_closed_loop(&cfg, m, None).unwrap().trace.outputs();
        let e = rmse(&y, &y_ref).unwrap();
        if m == Method::Bd {
            assert_eq!(e, 0.0);
        } else if e > 0.02 {
            worst.push(format!("{m} {e:.4}"));
        }
    }
    assert!(worst.is_empty(), "noise-free RMSE above 0.02: {}", worst.join(", "));
}

#[test]
fn single_seed_all_methods_is_fast() {
    let cfg = example1();
    let start = Instant::now();
    for m in Method::ALL {
        run_closed_loop(&cfg, m, Some(0)).unwrap();
    }
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
