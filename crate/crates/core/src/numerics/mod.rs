//! Dense linear algebra, log-space arithmetic, and Gaussian primitives.

mod gaussian;
mod linalg;
mod rng;
mod special;

pub use gaussian::{log_mvn_pdf, sample_mvn};
pub use linalg::{axpy, dot, norm, spd_factorize, sub, Matrix, SpdFactor, PD_TOLERANCE};
pub use rng::RngStream;
pub use special::{ln_gamma, log_mean_exp, log_sum_exp, unit_sphere_area};
