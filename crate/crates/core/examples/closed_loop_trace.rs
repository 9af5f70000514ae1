//! One noisy closed-loop run next to the noise-free reference.
//!
//! cargo run --release --example closed_loop_trace [-- METHOD SEED]

use adaptive_diff::control::rmse;
use adaptive_diff::experiment::{parse_config, reference_trace, run_closed_loop, Method};

fn main() -> adaptive_diff::Result<()> {
    let cfg = parse_config(include_str!("../../../configs/example1.conf"))?;
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().as_deref().unwrap_or("aise-vrf-er").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let reference = reference_trace(&cfg)?;
    let run = run_closed_loop(&cfg, method, Some(seed))?;
    println!(
        "{method}, seed {seed}: rmse {:.4}, reference settles (2%) at {:.2} s",
        rmse(&run.trace.outputs(), &reference.outputs())?,
        reference.settling_time(0.02)
    );

    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "t", "y_ref", "y", "u", "ud");
    for (a, b) in reference.rows.iter().zip(&run.trace.rows).step_by(250) {
        println!("{:6.2} {:8.4} {:8.4} {:8.3} {:8.3}", a.t, a.y, b.y, b.u, b.ud);
    }
    if let Some(diag) = &run.diagnostics {
        let forgot = diag.iter().filter(|d| d.lambda < 1.0).count();
        let last = diag.last().expect("nonempty run");
        println!(
            "forgetting active on {forgot} of {} steps; final eig(P) in [{:.3e}, {:.3e}]",
            diag.len(),
            last.eig_min_p,
            last.eig_max_p
        );
    }
    Ok(())
}
