//! Central finite-difference checks of analytic gradients and Hessians.

use crate::error::Result;
use crate::numerics::Matrix;
use crate::targets::Target;

/// Relative step: `h_i = FD_STEP · (1 + |x_i|)`.
pub const FD_STEP: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const HESSIAN_TOLERANCE: f64 = 1e-4;

fn step_for(x: f64) -> f64 {
    FD_STEP * (1.0 + x.abs())
}

/// Central differences of a scalar function.
pub fn central_gradient(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step_for(x[i]);
            probe[i] = x[i] + h;
            let up = f(&probe)?;
            probe[i] = x[i] - h;
            let down = f(&probe)?;
            probe[i] = x[i];
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

/// Central differences of a gradient, symmetrized.
pub fn central_hessian(grad: impl Fn(&[f64]) -> Result<Vec<f64>>, x: &[f64]) -> Result<Matrix<f64>> {
    let d = x.len();
    let mut h = Matrix::zeros(d);
    let mut probe = x.to_vec();
    for j in 0..d {
        let step = step_for(x[j]);
        probe[j] = x[j] + step;
        let up = grad(&probe)?;
        probe[j] = x[j] - step;
        let down = grad(&probe)?;
        probe[j] = x[j];
        for i in 0..d {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    Ok(h.symmetrized())
}

/// `max_i |a_i − b_i| / max(1, |b_i|)`.
pub fn relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Worst relative errors of a target's derivatives at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointErrors {
    pub gradient: f64,
    pub hessian: f64,
}

pub fn check_point<T: Target<f64> + ?Sized>(target: &T, x: &[f64]) -> Result<PointErrors> {
    let d = target.derivatives(x)?;
    let fd_grad = central_gradient(|p| target.log_density(p), x)?;
    let fd_hess = central_hessian(|p| target.grad_log_density(p), x)?;
    Ok(PointErrors {
        gradient: relative_error(&d.gradient, &fd_grad),
        hessian: relative_error(d.hessian.as_slice(), fd_hess.as_slice()),
    })
}
