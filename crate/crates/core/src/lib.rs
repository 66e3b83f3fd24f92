#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod error;
pub mod estimators;
pub mod gradcheck;
pub mod harness;
pub mod numerics;
pub mod proposals;
pub mod scalar;
pub mod targets;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations.
pub type Gramis64<'a, T> = adaptation::Gramis<'a, f64, T>;
pub type GramisRun64 = adaptation::GramisRun<f64>;
pub type Matrix64 = numerics::Matrix<f64>;
pub type Proposal64 = proposals::GaussianProposal<f64>;
pub type Bank64 = proposals::ProposalBank<f64>;
pub type Samples64 = estimators::WeightedSampleSet<f64>;
pub type GaussianMixture64 = targets::GaussianMixture<f64>;
pub type GgMixture64 = targets::GgMixture<f64>;
pub type Banana64 = targets::Banana<f64>;
pub type Truth64 = targets::GroundTruth<f64>;
