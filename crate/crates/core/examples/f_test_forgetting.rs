//! Variable-rate forgetting on a residual stream whose spread jumps.

use adaptive_diff::rls::{f_quantile, VariableRateForgetting, VrfConfig};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> adaptive_diff::Result<()> {
    let cfg = VrfConfig::new(0.5, 20, 80, 0.08)?;
    let mut vrf = VariableRateForgetting::new(cfg)?;
    let c = vrf.constants();
    println!("a = {:.5}, b = {:.3}, c = {:.5}", c.a, c.b, c.c);
    println!("F^-1(2 tauN, b)(0.92) = {:.6}", f_quantile(40.0, c.b, 0.92)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let calm = Normal::new(0.0, 1.0).expect("valid sigma");
    let rough = Normal::new(0.0, 4.0).expect("valid sigma");
    for k in 0..400 {
        let dist = if (200..240).contains(&k) { &rough } else { &calm };
        let eps = Vector2::new(dist.sample(&mut rng), dist.sample(&mut rng));
        let (g, lambda) = vrf.push(eps);
        if k % 20 == 0 || lambda < 0.9 {
            let g = g.map_or("   -   ".to_string(), |g| format!("{g:+7.3}"));
            println!("k = {k:3}  g = {g}  lambda = {lambda:.4}");
        }
    }
    Ok(())
}
