//! Multivariate normal log-density and sampling through a Cholesky factor.

use rand::Rng;

use super::linalg::{sub, SpdFactor};
use crate::error::{check_dim, Result};
use crate::scalar::Real;

/// `ln N(x; mean, A)` where `cov_factor` factors `A`.
pub fn log_mvn_pdf<F: Real>(x: &[F], mean: &[F], cov_factor: &SpdFactor<F>) -> Result<F> {
    let d = cov_factor.dim();
    check_dim(d, x.len())?;
    check_dim(d, mean.len())?;
    let q = cov_factor.quad_form(&sub(x, mean))?;
    let half = F::lit(0.5);
    let log_2pi = F::lit((2.0 * std::f64::consts::PI).ln());
    Ok(-half * (F::from_usize(d).unwrap() * log_2pi + cov_factor.log_det() + q))
}

/// `mean + L z` with `z` i.i.d. standard normal drawn from `rng`.
pub fn sample_mvn<F: Real, R: Rng + ?Sized>(
    mean: &[F],
    cov_factor: &SpdFactor<F>,
    rng: &mut R,
) -> Vec<F> {
    assert_eq!(mean.len(), cov_factor.dim(), "mean and factor dimensions differ");
    let z: Vec<F> = (0..mean.len()).map(|_| F::standard_normal(rng)).collect();
    let mut x = cov_factor.mul_lower(&z);
    for (xi, &mi) in x.iter_mut().zip(mean) {
        *xi += mi;
    }
    x
}
