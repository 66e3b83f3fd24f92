#![allow(dead_code)]

use gramis::numerics::Matrix;
use gramis::targets::{Banana, Derivatives, GaussianMixture, GgMixture, Target};
use gramis::Result;

/// One-dimensional `π(x) ∝ exp(−x⁴/4)`.
pub struct Quartic;

impl Target<f64> for Quartic {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(-x[0].powi(4) / 4.0)
    }
    fn derivatives(&self, x: &[f64]) -> Result<Derivatives<f64>> {
        let mut h = Matrix::zeros(1);
        h[(0, 0)] = -3.0 * x[0] * x[0];
        Ok(Derivatives {
            log_density: self.log_density(x)?,
            gradient: vec![-x[0].powi(3)],
            hessian: h,
        })
    }
}

pub fn toy_two_component() -> GaussianMixture<f64> {
    GaussianMixture::new(
        vec![0.5, 0.5],
        vec![vec![-5.0, -5.0], vec![6.0, 4.0]],
        vec![
            Matrix::scaled_identity(2, 0.25),
            Matrix::from_rows(&[[0.52, 0.48], [0.48, 0.52]]).unwrap(),
        ],
    )
    .unwrap()
}

pub const FIVE_MEANS: [[f64; 2]; 5] = [[-10.0, -10.0], [0.0, 16.0], [13.0, 8.0], [-9.0, 7.0], [14.0, -4.0]];

pub fn five_component() -> GaussianMixture<f64> {
    let covs = [
        [[5.0, 2.0], [2.0, 5.0]],
        [[2.0, -1.3], [-1.3, 2.0]],
        [[2.0, 0.8], [0.8, 2.0]],
        [[3.0, 1.2], [1.2, 0.5]],
        [[0.2, -0.1], [-0.1, 0.2]],
    ];
    GaussianMixture::new(
        vec![0.2; 5],
        FIVE_MEANS.iter().map(|m| m.to_vec()).collect(),
        covs.iter().map(|c| Matrix::from_rows(c).unwrap()).collect(),
    )
    .unwrap()
}

pub fn gg_five(shape: f64, smoothing: f64) -> GgMixture<f64> {
    GgMixture::new(
        vec![0.2; 5],
        FIVE_MEANS.iter().map(|m| m.to_vec()).collect(),
        vec![Matrix::identity(2); 5],
        vec![shape; 5],
        smoothing,
    )
    .unwrap()
}

pub fn banana(dim: usize) -> Banana<f64> {
    Banana::new(dim, 3.0, 1.0).unwrap()
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?} (tol {tol})");
    }
}

use gramis::adaptation::{log_weights, Weighting};
use gramis::estimators::{z_estimate, SampleTag, WeightedSampleSet};
use gramis::numerics::RngStream;
use gramis::proposals::{GaussianProposal, ProposalBank};
use rand::Rng;

/// Bank of one-dimensional Gaussians.
pub fn bank_1d(means: &[f64], variances: &[f64]) -> ProposalBank<f64> {
    ProposalBank::new(
        means
            .iter()
            .zip(variances)
            .map(|(&m, &v)| GaussianProposal::new(vec![m], Matrix::scaled_identity(1, v)).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Draws `k` samples per proposal and weights them.
pub fn weighted_draws<T: Target<f64>>(
    target: &T,
    bank: &ProposalBank<f64>,
    k: usize,
    weighting: Weighting,
    streams: &mut [RngStream],
) -> WeightedSampleSet<f64> {
    let batch = bank.sample(k, streams).unwrap();
    let lw = log_weights(bank, &batch, target, weighting).unwrap();
    let tags = batch.tags.iter().map(|&(n, k)| SampleTag { t: 1, n, k }).collect();
    WeightedSampleSet::new(bank.dim(), 1, batch.samples, lw, tags).unwrap()
}

pub struct Dominance {
    pub var_dm: f64,
    pub var_standard: f64,
    /// Bootstrap standard error of the standard-weight variance.
    pub bootstrap_se: f64,
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// `Ẑ` replicated under both weightings on a fixed two-proposal 1-D setup
/// targeting the normalized `N(0, 1)`.
pub fn dm_dominance(replications: usize, seed: u64) -> Dominance {
    let target = GaussianMixture::gaussian(vec![0.0], Matrix::identity(1)).unwrap();
    let bank = bank_1d(&[-1.0, 1.5], &[1.0, 0.5]);
    let mut dm = Vec::with_capacity(replications);
    let mut standard = Vec::with_capacity(replications);
    for r in 0..replications as u64 {
        let mut streams = vec![RngStream::new(seed, 2 * r), RngStream::new(seed, 2 * r + 1)];
        let set = weighted_draws(&target, &bank, 5, Weighting::DeterministicMixture, &mut streams);
        dm.push(z_estimate(&set).unwrap());
        let mut streams = vec![RngStream::new(seed ^ 0x5eed, 2 * r), RngStream::new(seed ^ 0x5eed, 2 * r + 1)];
        let set = weighted_draws(&target, &bank, 5, Weighting::Standard, &mut streams);
        standard.push(z_estimate(&set).unwrap());
    }
    let mut rng = RngStream::for_diagnostics(seed);
    let boot: Vec<f64> = (0..200)
        .map(|_| {
            let resample: Vec<f64> = (0..replications).map(|_| standard[rng.gen_range(0..replications)]).collect();
            variance(&resample)
        })
        .collect();
    Dominance {
        var_dm: variance(&dm),
        var_standard: variance(&standard),
        bootstrap_se: variance(&boot).sqrt(),
    }
}

use gramis::harness::TargetSpec;

fn random_spd(d: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                .collect()
        })
        .collect()
}

fn random_weights(l: usize, rng: &mut RngStream) -> Vec<f64> {
    let raw: Vec<f64> = (0..l).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

/// A random member of `family` ("gaussian_mixture", "gg_mixture" or "banana").
pub fn random_spec(family: &str, rng: &mut RngStream) -> TargetSpec {
    match family {
        "gaussian_mixture" | "gg_mixture" => {
            let d = rng.gen_range(1..=4);
            let l = rng.gen_range(1..=4);
            let means: Vec<Vec<f64>> = (0..l).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let covs: Vec<Vec<Vec<f64>>> = (0..l).map(|_| random_spd(d, rng)).collect();
            let weights = Some(random_weights(l, rng));
            if family == "gaussian_mixture" {
                TargetSpec::GaussianMixture {
                    weights,
                    means,
                    covariances: covs,
                }
            } else {
                TargetSpec::GgMixture {
                    weights,
                    means,
                    scales: covs,
                    shapes: (0..l).map(|_| rng.gen_range(0.5..2.0)).collect(),
                    smoothing: gramis::targets::DEFAULT_SMOOTHING,
                }
            }
        }
        "banana" => TargetSpec::Banana {
            dim: rng.gen_range(2..=10),
            b: rng.gen_range(0.5..3.0),
            c: rng.gen_range(0.5..2.0),
        },
        _ => panic!("unknown family {family}"),
    }
}

pub const FAMILIES: [&str; 3] = ["gaussian_mixture", "gg_mixture", "banana"];
