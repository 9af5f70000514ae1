//! Classic RLS against RLS with exponential resetting when the regressor
//! stops exciting one direction: forgetting alone would let that direction's
//! covariance grow, resetting caps it at the inverse of `R∞`.

use adaptive_diff::rls::{ErConfig, RlsState, StackedRegression};
use nalgebra::{DMatrix, DVector};

fn main() -> adaptive_diff::Result<()> {
    let r_theta = DMatrix::identity(2, 2) * 0.1;
    let er = ErConfig::scaled_identity(2, 4.0)?;
    let mut classic = RlsState::new(DVector::zeros(2), &r_theta)?;
    let mut reset = classic.clone();
    let truth = DVector::from_vec(vec![1.5, -0.5]);

    for k in 0..300 {
        // only the first coordinate is excited after step 50
        let phi = if k < 50 {
            DMatrix::from_row_slice(2, 2, &[1.0, (k as f64).sin(), 0.0, 0.0])
        } else {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        };
        let z = -(&phi * &truth);
        let reg = StackedRegression::new(phi, z, DVector::from_vec(vec![1.0, 1e-3]))?;
        classic.update_classic(&reg)?;
        reset.update_vrf_er(&reg, 0.9, &er)?;
        if k % 50 == 49 {
            let eig = |s: &RlsState| adaptive_diff::linalg::max_eigenvalue(s.covariance());
            println!(
                "k = {k:3}  classic: theta = {:.3?}, eigmax P = {:.3e}   resetting: theta = {:.3?}, eigmax P = {:.3e}",
                classic.theta().as_slice(),
                eig(&classic),
                reset.theta().as_slice(),
                eig(&reset)
            );
        }
    }
    println!("bound eigmax(R∞⁻¹) = {:.3e}", er.max_inverse_eigenvalue());
    Ok(())
}
