//! Velocity from noisy position: a synthetic lane change at 40 dB SNR,
//! differentiated by backward difference, AISE and AISE/VRF-ER.
//!
//! cargo run --release --example differentiate_signal [-- out.csv]

use adaptive_diff::experiment::{
    diff_csv, differentiate, noise_for_snr, parse_config, snr_db, synth_trajectory, Method, SignalTable,
    TrajectoryKind,
};

fn main() -> adaptive_diff::Result<()> {
    let cfg = parse_config(include_str!("../../../configs/example2.conf"))?;
    let (n, ts) = (3000, 0.01);
    let kind = TrajectoryKind::named("sigmoidLateral", n as f64 * ts)?;
    let clean = synth_trajectory(&kind, n, ts)?;
    let noise = noise_for_snr(&clean.signal.y, 40.0, 7);
    let noisy: Vec<f64> = clean.signal.y.iter().zip(&noise).map(|(y, v)| y + v).collect();
    let measured = SignalTable::new(clean.signal.t.clone(), noisy)?;
    println!("SNR {:.2} dB, {n} samples at Ts = {ts} s", snr_db(&clean.signal.y, &noise)?);

    // skip the start-up transient
    let skip = 200;
    for method in [Method::Bd, Method::Aise, Method::AiseVrfEr] {
        let rows = differentiate(&cfg, method, &measured)?;
        let ss: f64 = rows[skip..]
            .iter()
            .zip(&clean.derivative[skip..])
            .map(|(r, d)| (r.d_hat - d).powi(2))
            .sum();
        let rmse = (ss / (n - skip) as f64).sqrt();
        let peak = rows.iter().map(|r| r.d_hat.abs()).fold(0.0, f64::max);
        println!("{:<12} rmse {rmse:8.4}   max |dhat| {peak:8.3}", method.name());
        if method == Method::AiseVrfEr {
            if let Some(path) = std::env::args().nth(1) {
                std::fs::write(&path, diff_csv(&rows)).expect("write output");
                println!("wrote {path}");
            }
        }
    }
    Ok(())
}
