//! Unnormalized target densities with analytic gradients and Hessians.
//!
//! Three families are provided: Gaussian mixtures, generalized-Gaussian
//! mixtures (optionally smoothed at their means), and the banana-shaped
//! pushforward of a Gaussian. Each reports closed-form ground truth for scoring.

mod banana;
mod gaussian_mixture;
mod generalized_gaussian;

pub use banana::Banana;
pub use gaussian_mixture::GaussianMixture;
pub use generalized_gaussian::{gg_reparam, gg_reparam_inverse, GgMixture, DEFAULT_SMOOTHING};

use crate::error::Result;
use crate::numerics::{log_sum_exp, Matrix};
use crate::scalar::Real;

/// Log-density together with its gradient and Hessian at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives<F> {
    pub log_density: F,
    pub gradient: Vec<F>,
    pub hessian: Matrix<F>,
}

/// Known quantities of the normalized target `π̃ = π / Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<F> {
    pub normalizing_constant: Option<F>,
    pub mean: Option<Vec<F>>,
    /// Componentwise `E[X_i²]`.
    pub second_moment: Option<Vec<F>>,
}

impl<F> Default for GroundTruth<F> {
    fn default() -> Self {
        Self {
            normalizing_constant: None,
            mean: None,
            second_moment: None,
        }
    }
}

/// An unnormalized log-density `ln π(x)` on `R^d`.
pub trait Target<F: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[F]) -> Result<F>;

    fn grad_log_density(&self, x: &[F]) -> Result<Vec<F>> {
        Ok(self.derivatives(x)?.gradient)
    }

    fn hessian_log_density(&self, x: &[F]) -> Result<Matrix<F>> {
        Ok(self.derivatives(x)?.hessian)
    }

    fn derivatives(&self, x: &[F]) -> Result<Derivatives<F>>;

    fn truth(&self) -> GroundTruth<F> {
        GroundTruth::default()
    }
}

impl<F: Real, T: Target<F> + ?Sized> Target<F> for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[F]) -> Result<F> {
        (**self).log_density(x)
    }
    fn grad_log_density(&self, x: &[F]) -> Result<Vec<F>> {
        (**self).grad_log_density(x)
    }
    fn hessian_log_density(&self, x: &[F]) -> Result<Matrix<F>> {
        (**self).hessian_log_density(x)
    }
    fn derivatives(&self, x: &[F]) -> Result<Derivatives<F>> {
        (**self).derivatives(x)
    }
    fn truth(&self) -> GroundTruth<F> {
        (**self).truth()
    }
}

/// One mixture component's contribution at a point: `ln(ω_ℓ f_ℓ(x))`, the
/// gradient of `ln f_ℓ`, and optionally its Hessian.
pub(crate) struct ComponentTerms<F> {
    pub log_weighted: F,
    pub grad: Vec<F>,
    pub hess: Option<Matrix<F>>,
}

/// Combines per-component log-derivatives into those of `ln Σ ω_ℓ f_ℓ`.
///
/// With responsibilities `r_ℓ`, the gradient is `Σ r_ℓ a_ℓ` and the Hessian is
/// `Σ r_ℓ (B_ℓ + a_ℓ a_ℓᵀ) − g gᵀ`, i.e. `∇²π/π − (∇π/π)(∇π/π)ᵀ`.
pub(crate) fn combine_components<F: Real>(
    dim: usize,
    terms: &[ComponentTerms<F>],
) -> Result<(F, Vec<F>, Option<Matrix<F>>)> {
    let logs: Vec<F> = terms.iter().map(|t| t.log_weighted).collect();
    let log_density = log_sum_exp(&logs)?;
    let want_hessian = terms.iter().all(|t| t.hess.is_some());

    let mut grad = vec![F::zero(); dim];
    let mut hess = want_hessian.then(|| Matrix::zeros(dim));
    for t in terms {
        let r = (t.log_weighted - log_density).exp();
        if r == F::zero() {
            continue;
        }
        for (g, &a) in grad.iter_mut().zip(&t.grad) {
            *g += r * a;
        }
        if let (Some(h), Some(b)) = (hess.as_mut(), t.hess.as_ref()) {
            h.add_scaled(r, b);
            h.add_outer(r, &t.grad);
        }
    }
    if let Some(h) = hess.as_mut() {
        h.add_outer(-F::one(), &grad);
        *h = h.symmetrized();
    }
    Ok((log_density, grad, hess))
}

pub(crate) fn validate_weights<F: Real>(weights: &[F]) -> Result<Vec<F>> {
    use crate::error::Error;
    if weights.is_empty() {
        return Err(Error::InvalidParameter("mixture needs at least one component".into()));
    }
    if weights.iter().any(|&w| !(w > F::zero()) || !w.is_finite()) {
        return Err(Error::InvalidParameter("mixture weights must be positive".into()));
    }
    let total: F = weights.iter().copied().sum();
    if (total - F::one()).abs() > F::lit(1e-9) {
        return Err(Error::InvalidParameter(format!(
            "mixture weights sum to {total}, expected 1"
        )));
    }
    Ok(weights.iter().map(|w| w.ln()).collect())
}
