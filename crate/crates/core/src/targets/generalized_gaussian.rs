use super::{combine_components, validate_weights, ComponentTerms, Derivatives, GroundTruth, Target};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, ln_gamma, spd_factorize, sub, Matrix};
use crate::scalar::Real;

/// Smoothing offset added to the Mahalanobis form before the power.
pub const DEFAULT_SMOOTHING: f64 = 1e-5;

/// Mixture of multivariate generalized Gaussians
/// `Σ ω_ℓ C_ℓ |Σ_ℓ|^{-1/2} exp(−½ (θ_ℓ(x) + δ)^{η_ℓ})`, with
/// `θ_ℓ(x) = (x − ν_ℓ)ᵀ Σ_ℓ⁻¹ (x − ν_ℓ)`.
///
/// `C_ℓ` is the exact normalizer of the unsmoothed (`δ = 0`) density; the same
/// δ is used for the density and both derivatives so they stay consistent.
#[derive(Clone, Debug)]
pub struct GgMixture<F> {
    dim: usize,
    weights: Vec<F>,
    log_weights: Vec<F>,
    means: Vec<Vec<F>>,
    scales: Vec<Matrix<F>>,
    shapes: Vec<F>,
    smoothing: F,
    precisions: Vec<Matrix<F>>,
    log_consts: Vec<F>,
}

/// `ln C` for dimension `d` and shape `η`:
/// `C = d Γ(d/2) / (π^{d/2} Γ(1 + d/(2η)) 2^{1 + d/(2η)})`.
fn log_normalizer(d: usize, shape: f64) -> f64 {
    let d = d as f64;
    let r = d / (2.0 * shape);
    d.ln() + ln_gamma(d / 2.0)
        - (d / 2.0) * std::f64::consts::PI.ln()
        - ln_gamma(1.0 + r)
        - (1.0 + r) * std::f64::consts::LN_2
}

/// Ratio `Cov[X] / Σ` of one generalized Gaussian component.
fn covariance_factor(d: usize, shape: f64) -> f64 {
    let df = d as f64;
    ((1.0 / shape) * std::f64::consts::LN_2 + ln_gamma((df + 2.0) / (2.0 * shape))
        - df.ln()
        - ln_gamma(df / (2.0 * shape)))
    .exp()
}

impl<F: Real> GgMixture<F> {
    pub fn new(
        weights: Vec<F>,
        means: Vec<Vec<F>>,
        scales: Vec<Matrix<F>>,
        shapes: Vec<F>,
        smoothing: F,
    ) -> Result<Self> {
        let log_weights = validate_weights(&weights)?;
        let l = weights.len();
        check_dim(l, means.len())?;
        check_dim(l, scales.len())?;
        check_dim(l, shapes.len())?;
        if !(smoothing >= F::zero()) || !smoothing.is_finite() {
            return Err(Error::InvalidParameter("smoothing must be non-negative".into()));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let mut precisions = Vec::with_capacity(l);
        let mut log_consts = Vec::with_capacity(l);
        for ((m, s), &eta) in means.iter().zip(&scales).zip(&shapes) {
            check_dim(dim, m.len())?;
            check_dim(dim, s.dim())?;
            if !(eta > F::zero()) || !eta.is_finite() {
                return Err(Error::InvalidParameter("shape must be positive".into()));
            }
            let f = spd_factorize(s)?;
            precisions.push(f.inverse());
            log_consts.push(
                F::lit(log_normalizer(dim, eta.as_f64())) - F::lit(0.5) * f.log_det(),
            );
        }
        Ok(Self {
            dim,
            weights,
            log_weights,
            means,
            scales,
            shapes,
            smoothing,
            precisions,
            log_consts,
        })
    }

    pub fn smoothing(&self) -> F {
        self.smoothing
    }

    pub fn means(&self) -> &[Vec<F>] {
        &self.means
    }

    pub fn shapes(&self) -> &[F] {
        &self.shapes
    }

    /// `ln(C_ℓ |Σ_ℓ|^{-1/2}) − ½ (θ_ℓ(x) + δ)^{η_ℓ}`, without the mixture weight.
    pub fn component_log(&self, component: usize, x: &[F]) -> Result<F> {
        check_dim(self.dim, x.len())?;
        if component >= self.weights.len() {
            return Err(Error::InvalidParameter(format!("no component {component}")));
        }
        let diff = sub(x, &self.means[component]);
        let theta = dot(&diff, &self.precisions[component].mul_vec(&diff)?);
        let u = theta + self.smoothing;
        Ok(self.log_consts[component] - F::lit(0.5) * u.powf(self.shapes[component]))
    }

    fn terms(&self, x: &[F], with_hessian: bool) -> Result<Vec<ComponentTerms<F>>> {
        check_dim(self.dim, x.len())?;
        let one = F::one();
        let two = F::lit(2.0);
        let half = F::lit(0.5);
        (0..self.weights.len())
            .map(|l| {
                let eta = self.shapes[l];
                let p = &self.precisions[l];
                let diff = sub(x, &self.means[l]);
                let w = p.mul_vec(&diff)?;
                let u = dot(&diff, &w) + self.smoothing;
                if u == F::zero() && eta < one {
                    return Err(Error::NonSmoothAtMean { component: l });
                }
                let u_pow_m1 = u.powf(eta - one);
                // ∇ ln g = −η u^{η−1} w, with w = Σ⁻¹(x − ν)
                let grad: Vec<F> = w.iter().map(|&wi| -eta * u_pow_m1 * wi).collect();
                let hess = with_hessian.then(|| {
                    // ∇² ln g = −η [u^{η−1} Σ⁻¹ + 2(η−1) u^{η−2} w wᵀ]
                    let mut h = p.scaled(-eta * u_pow_m1);
                    if eta != one && u > F::zero() {
                        h.add_outer(-two * eta * (eta - one) * u.powf(eta - two), &w);
                    }
                    h
                });
                Ok(ComponentTerms {
                    log_weighted: self.log_weights[l] + self.log_consts[l] - half * u.powf(eta),
                    grad,
                    hess,
                })
            })
            .collect()
    }
}

impl<F: Real> Target<F> for GgMixture<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[F]) -> Result<F> {
        let logs = (0..self.weights.len())
            .map(|l| Ok(self.log_weights[l] + self.component_log(l, x)?))
            .collect::<Result<Vec<F>>>()?;
        crate::numerics::log_sum_exp(&logs)
    }

    fn grad_log_density(&self, x: &[F]) -> Result<Vec<F>> {
        let terms = self.terms(x, false)?;
        Ok(combine_components(self.dim, &terms)?.1)
    }

    fn derivatives(&self, x: &[F]) -> Result<Derivatives<F>> {
        let terms = self.terms(x, true)?;
        let (log_density, gradient, hessian) = combine_components(self.dim, &terms)?;
        Ok(Derivatives {
            log_density,
            gradient,
            hessian: hessian.expect("hessian requested"),
        })
    }

    /// Moments of the unsmoothed mixture.
    fn truth(&self) -> GroundTruth<F> {
        let mut mean = vec![F::zero(); self.dim];
        let mut second = vec![F::zero(); self.dim];
        for (l, &w) in self.weights.iter().enumerate() {
            let k = F::lit(covariance_factor(self.dim, self.shapes[l].as_f64()));
            for i in 0..self.dim {
                let m = self.means[l][i];
                mean[i] += w * m;
                second[i] += w * (k * self.scales[l][(i, i)] + m * m);
            }
        }
        GroundTruth {
            normalizing_constant: Some(F::one()),
            mean: Some(mean),
            second_moment: Some(second),
        }
    }
}

/// Maps the `(σ, η)` scalar parametrization `exp(−½ (|x−ν|/σ)^{2η})` to the
/// common `(α, β)` one `exp(−(|x−ν|/α)^β)`.
pub fn gg_reparam<F: Real>(sigma: F, shape: F) -> Result<(F, F)> {
    if !(sigma > F::zero()) || !(shape > F::zero()) {
        return Err(Error::InvalidParameter("σ and η must be positive".into()));
    }
    let two = F::lit(2.0);
    let beta = two * shape;
    let alpha = two.powf(F::one() / beta) * sigma;
    Ok((alpha, beta))
}

/// Inverse of [`gg_reparam`].
pub fn gg_reparam_inverse<F: Real>(alpha: F, beta: F) -> Result<(F, F)> {
    if !(alpha > F::zero()) || !(beta > F::zero()) {
        return Err(Error::InvalidParameter("α and β must be positive".into()));
    }
    let two = F::lit(2.0);
    Ok((alpha / two.powf(F::one() / beta), beta / two))
}
