//! Log-gamma, sphere areas, and log-space reductions.

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (and non-integer negative `x` via reflection).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin().abs();
        return (std::f64::consts::PI / s).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Surface area `2 π^{d/2} / Γ(d/2)` of the unit sphere embedded in `R^d`.
pub fn unit_sphere_area<F: Real>(d: usize) -> Result<F> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let half = d as f64 / 2.0;
    let log_area = std::f64::consts::LN_2 + half * std::f64::consts::PI.ln() - ln_gamma(half);
    Ok(F::lit(log_area.exp()))
}

/// `ln Σ exp(vᵢ)` with max-shift stabilization.
///
/// Returns `+inf` if any input is `+inf`; NaN inputs propagate.
pub fn log_sum_exp<F: Real>(values: &[F]) -> Result<F> {
    let max = values.iter().copied().fold(F::neg_infinity(), F::max);
    if values.iter().any(|v| v.is_nan()) {
        return Ok(F::nan());
    }
    if max == F::neg_infinity() {
        return Err(Error::AllNegInfinity);
    }
    if max == F::infinity() {
        return Ok(max);
    }
    let sum: F = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// `ln((1/n) Σ exp(vᵢ))`.
pub fn log_mean_exp<F: Real>(values: &[F]) -> Result<F> {
    let n = F::from_usize(values.len()).ok_or(Error::AllNegInfinity)?;
    Ok(log_sum_exp(values)? - n.ln())
}
