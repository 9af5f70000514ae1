//! Designs the 5th-order 0.6π low-pass used by the BD/BW baseline.

use std::f64::consts::PI;

use adaptive_diff::baseline::butterworth_design;

fn main() -> adaptive_diff::Result<()> {
    let filter = butterworth_design(5, 0.6 * PI)?;
    let (b, a) = filter.coefficients();
    println!("b = {b:.6?}");
    println!("a = {a:.6?}");
    for w in [0.0, 0.2 * PI, 0.4 * PI, 0.6 * PI, 0.8 * PI] {
        let m = filter.magnitude(w);
        println!("|H(e^j{:.1}π)| = {m:.6}  ({:+.2} dB)", w / PI, 20.0 * m.log10());
    }
    println!("pole radii: {:.4?}", filter.pole_radii());

    let mut f = filter.clone();
    let dc: f64 = (0..200).map(|k| f.step(if k == 0 { 1.0 } else { 0.0 })).sum();
    println!("impulse response sum over 200 samples: {dc:.12}");
    Ok(())
}
