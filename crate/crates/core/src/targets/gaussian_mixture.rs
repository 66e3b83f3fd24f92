use super::{combine_components, validate_weights, ComponentTerms, Derivatives, GroundTruth, Target};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, spd_factorize, sub, Matrix};
use crate::scalar::Real;

/// Finite mixture of multivariate Gaussians `Σ ω_ℓ N(x; γ_ℓ, Σ_ℓ)` (normalized, `Z = 1`).
#[derive(Clone, Debug)]
pub struct GaussianMixture<F> {
    dim: usize,
    weights: Vec<F>,
    log_weights: Vec<F>,
    means: Vec<Vec<F>>,
    covariances: Vec<Matrix<F>>,
    precisions: Vec<Matrix<F>>,
    log_norms: Vec<F>,
}

impl<F: Real> GaussianMixture<F> {
    pub fn new(weights: Vec<F>, means: Vec<Vec<F>>, covariances: Vec<Matrix<F>>) -> Result<Self> {
        let log_weights = validate_weights(&weights)?;
        check_dim(weights.len(), means.len())?;
        check_dim(weights.len(), covariances.len())?;
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let log_2pi = F::lit((2.0 * std::f64::consts::PI).ln());
        let mut precisions = Vec::with_capacity(covariances.len());
        let mut log_norms = Vec::with_capacity(covariances.len());
        for (m, c) in means.iter().zip(&covariances) {
            check_dim(dim, m.len())?;
            check_dim(dim, c.dim())?;
            let f = spd_factorize(c)?;
            precisions.push(f.inverse());
            log_norms.push(-F::lit(0.5) * (F::from_usize(dim).unwrap() * log_2pi + f.log_det()));
        }
        Ok(Self {
            dim,
            weights,
            log_weights,
            means,
            covariances,
            precisions,
            log_norms,
        })
    }

    /// A single Gaussian `N(mean, cov)`.
    pub fn gaussian(mean: Vec<F>, cov: Matrix<F>) -> Result<Self> {
        Self::new(vec![F::one()], vec![mean], vec![cov])
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<F>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Matrix<F>] {
        &self.covariances
    }

    fn terms(&self, x: &[F], with_hessian: bool) -> Result<Vec<ComponentTerms<F>>> {
        check_dim(self.dim, x.len())?;
        let half = F::lit(0.5);
        (0..self.weights.len())
            .map(|l| {
                let diff = sub(x, &self.means[l]);
                let p = &self.precisions[l];
                let pd = p.mul_vec(&diff)?;
                let quad = dot(&diff, &pd);
                Ok(ComponentTerms {
                    log_weighted: self.log_weights[l] + self.log_norms[l] - half * quad,
                    grad: pd.into_iter().map(|v| -v).collect(),
                    hess: with_hessian.then(|| p.scaled(-F::one())),
                })
            })
            .collect()
    }
}

impl<F: Real> Target<F> for GaussianMixture<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[F]) -> Result<F> {
        let terms = self.terms(x, false)?;
        Ok(combine_components(self.dim, &terms)?.0)
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

    fn truth(&self) -> GroundTruth<F> {
        let mut mean = vec![F::zero(); self.dim];
        let mut second = vec![F::zero(); self.dim];
        for (l, &w) in self.weights.iter().enumerate() {
            for i in 0..self.dim {
                let m = self.means[l][i];
                mean[i] += w * m;
                second[i] += w * (self.covariances[l][(i, i)] + m * m);
            }
        }
        GroundTruth {
            normalizing_constant: Some(F::one()),
            mean: Some(mean),
            second_moment: Some(second),
        }
    }
}
