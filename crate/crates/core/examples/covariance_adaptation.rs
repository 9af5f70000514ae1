//! Picks the process-noise scale and sensor-noise variance from residual
//! statistics, as the estimator does every step.

use adaptive_diff::adaptation::{adapt_covariances, jf, AdaptConfig, ResidualStats};
use adaptive_diff::LtiModel;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> adaptive_diff::Result<()> {
    let model = LtiModel::differentiator(0.01)?;
    let cfg = AdaptConfig::new(1e-6, 1e-2, 0.55, 50)?;
    let p_da = DMatrix::from_element(1, 1, 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for sigma in [1e-3, 1e-2, 0.05, 0.2] {
        let noise = Normal::new(0.0, sigma).expect("valid sigma");
        let mut stats = ResidualStats::new();
        for _ in 0..500 {
            stats.push(noise.sample(&mut rng));
        }
        let s = stats.sample_variance()?;
        let r = adapt_covariances(&stats, &p_da, &model, &cfg)?;
        let residual = jf(s, &p_da, &model, &r.v1) - r.v2;
        println!("S = {s:.3e}: eta = {:.3e}, V2 = {:.3e}, J = {residual:.1e}", r.eta, r.v2);
    }
    Ok(())
}
