use super::{Derivatives, GroundTruth, Target};
use crate::error::{check_dim, Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Real;

/// Banana-shaped density: the law of `X` with `X₂ = X̄₂ − b(X̄₁² − c²)` and
/// `X_j = X̄_j` otherwise, where `X̄ ~ N(0, diag(c², 1, …, 1))`.
///
/// The inverse map `x̄ = φ(x)` has unit Jacobian determinant, so
/// `ln π(x) = ln N(φ(x); 0, diag(c², 1, …, 1))` and `Z = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Banana<F> {
    dim: usize,
    b: F,
    c: F,
}

impl<F: Real> Banana<F> {
    pub fn new(dim: usize, b: F, c: F) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(c > F::zero()) || !b.is_finite() || !c.is_finite() {
            return Err(Error::InvalidParameter("banana requires finite b and c > 0".into()));
        }
        Ok(Self { dim, b, c })
    }

    pub fn b(&self) -> F {
        self.b
    }

    pub fn c(&self) -> F {
        self.c
    }

    /// Second coordinate of the Gaussianizing map: `x₂ + b(x₁² − c²)`.
    #[inline]
    fn bent(&self, x: &[F]) -> F {
        x[1] + self.b * (x[0] * x[0] - self.c * self.c)
    }

    fn log_norm(&self) -> F {
        let d = F::from_usize(self.dim).unwrap();
        -F::lit(0.5) * d * F::lit((2.0 * std::f64::consts::PI).ln()) - self.c.ln()
    }

    fn gradient_with(&self, x: &[F], bent: F) -> Vec<F> {
        let two = F::lit(2.0);
        let mut g: Vec<F> = x.iter().map(|&v| -v).collect();
        g[0] = -x[0] / (self.c * self.c) - two * self.b * x[0] * bent;
        g[1] = -bent;
        g
    }
}

impl<F: Real> Target<F> for Banana<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[F]) -> Result<F> {
        check_dim(self.dim, x.len())?;
        let bent = self.bent(x);
        let rest: F = x[2..].iter().map(|&v| v * v).sum();
        let q = x[0] * x[0] / (self.c * self.c) + bent * bent + rest;
        Ok(self.log_norm() - F::lit(0.5) * q)
    }

    fn grad_log_density(&self, x: &[F]) -> Result<Vec<F>> {
        check_dim(self.dim, x.len())?;
        Ok(self.gradient_with(x, self.bent(x)))
    }

    fn derivatives(&self, x: &[F]) -> Result<Derivatives<F>> {
        let log_density = self.log_density(x)?;
        let bent = self.bent(x);
        let gradient = self.gradient_with(x, bent);
        let two = F::lit(2.0);
        let four = F::lit(4.0);
        let mut hessian = Matrix::scaled_identity(self.dim, -F::one());
        hessian[(0, 0)] =
            -F::one() / (self.c * self.c) - two * self.b * bent - four * self.b * self.b * x[0] * x[0];
        hessian[(0, 1)] = -two * self.b * x[0];
        hessian[(1, 0)] = hessian[(0, 1)];
        Ok(Derivatives {
            log_density,
            gradient,
            hessian,
        })
    }

    fn truth(&self) -> GroundTruth<F> {
        let c2 = self.c * self.c;
        let mut second = vec![F::one(); self.dim];
        second[0] = c2;
        // Var(X̄₁²) = 2c⁴
        second[1] = F::one() + F::lit(2.0) * self.b * self.b * c2 * c2;
        GroundTruth {
            normalizing_constant: Some(F::one()),
            mean: Some(vec![F::zero(); self.dim]),
            second_moment: Some(second),
        }
    }
}
