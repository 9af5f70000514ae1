//! The Kalman forecast / assimilation cycle on the sampled integrator with
//! fixed noise covariances, converging to its steady-state gain.

use adaptive_diff::kalman::{residual, LtiModel};
use nalgebra::{DMatrix, DVector};

fn main() -> adaptive_diff::Result<()> {
    let model = LtiModel::differentiator(0.01)?;
    let v1 = DMatrix::from_element(1, 1, 1e-4);
    let v2 = 1e-2;
    let mut x_fc = DVector::zeros(1);
    let mut p_f = DMatrix::zeros(1, 1);

    for k in 0..200 {
        let t = k as f64 * 0.01;
        let y = (2.0 * t).sin();
        let z = residual(model.output(&x_fc), y);
        let da = model.assimilate(&x_fc, &p_f, z, v2)?;
        p_f = model.propagate_covariance(&da.p_da, &v1)?;
        x_fc = model.forecast(&da.x_da, 0.0)?.0;
        if k % 40 == 0 || k == 199 {
            println!("k = {k:3}  K = {:+.5}  Pda = {:.3e}  z = {z:+.4}", da.gain[0], da.p_da[(0, 0)]);
        }
    }
    Ok(())
}
