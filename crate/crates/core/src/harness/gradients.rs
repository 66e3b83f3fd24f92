use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TargetSpec;
use crate::error::Result;
use crate::gradcheck::{check_point, GRADIENT_TOLERANCE, HESSIAN_TOLERANCE};
use crate::numerics::{norm, sub, RngStream};

/// Radius of the balls around non-smooth means that are not probed.
pub const EXCLUSION_RADIUS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub family: String,
    pub dim: usize,
    pub points: usize,
    /// Draws rejected for falling inside an exclusion ball.
    pub excluded: usize,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    pub passed: bool,
}

/// Compares analytic derivatives with central differences at `points`
/// uniform draws from the target's extent.
pub fn check_gradients(spec: &TargetSpec, points: usize, seed: u64) -> Result<GradientReport> {
    let target = spec.build()?;
    let (low, high) = spec.extent();
    let singular = spec.singular_points();
    let mut rng = RngStream::for_diagnostics(seed);
    let mut report = GradientReport {
        family: spec.family().into(),
        dim: spec.dim(),
        points,
        excluded: 0,
        max_gradient_error: 0.0,
        max_hessian_error: 0.0,
        passed: false,
    };
    let mut checked = 0;
    while checked < points {
        let x: Vec<f64> = low.iter().zip(&high).map(|(&a, &b)| rng.gen_range(a..=b)).collect();
        if singular.iter().any(|m| norm(&sub(&x, m)) < EXCLUSION_RADIUS) {
            report.excluded += 1;
            continue;
        }
        let e = check_point(target.as_ref(), &x)?;
        report.max_gradient_error = report.max_gradient_error.max(e.gradient);
        report.max_hessian_error = report.max_hessian_error.max(e.hessian);
        checked += 1;
    }
    report.passed = report.max_gradient_error < GRADIENT_TOLERANCE && report.max_hessian_error < HESSIAN_TOLERANCE;
    Ok(report)
}
