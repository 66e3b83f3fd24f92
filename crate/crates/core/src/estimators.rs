//! Importance sampling estimators over accumulated weighted samples.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::IterationRecord;
use crate::error::{check_dim, Error, Result};
use crate::numerics::{log_mean_exp, log_sum_exp, RngStream};
use crate::proposals::ProposalBank;
use crate::scalar::Real;
use crate::targets::{GroundTruth, Target};

/// χ² values above this are reported as `+inf`.
pub const CHI2_OVERFLOW: f64 = 1e12;
/// χ² is `+inf` when the mixture reaches less target mass than this.
pub const CHI2_COVERAGE_FLOOR: f64 = 1e-6;
pub const DEFAULT_CHI2_SAMPLES: usize = 100_000;

/// Provenance of a weighted sample: iteration `t` (1-based), proposal `n`, draw `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTag {
    pub t: usize,
    pub n: usize,
    pub k: usize,
}

/// All weighted samples of a run (or a window of it).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSampleSet<F> {
    dim: usize,
    /// Total iterations `T` of the run the samples came from.
    iterations: usize,
    samples: Vec<Vec<F>>,
    log_weights: Vec<F>,
    tags: Vec<SampleTag>,
}

impl<F: Real> WeightedSampleSet<F> {
    pub fn new(
        dim: usize,
        iterations: usize,
        samples: Vec<Vec<F>>,
        log_weights: Vec<F>,
        tags: Vec<SampleTag>,
    ) -> Result<Self> {
        check_dim(samples.len(), log_weights.len())?;
        check_dim(samples.len(), tags.len())?;
        for x in &samples {
            check_dim(dim, x.len())?;
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == F::infinity()) {
            return Err(Error::InvalidParameter("log-weights must be finite or -inf".into()));
        }
        Ok(Self {
            dim,
            iterations,
            samples,
            log_weights,
            tags,
        })
    }

    /// Collects every sample of a run, in iteration order.
    pub fn from_records(dim: usize, records: &[IterationRecord<F>]) -> Result<Self> {
        let total: usize = records.iter().map(|r| r.batch.len()).sum();
        let mut samples = Vec::with_capacity(total);
        let mut log_weights = Vec::with_capacity(total);
        let mut tags = Vec::with_capacity(total);
        for r in records {
            samples.extend(r.batch.samples.iter().cloned());
            log_weights.extend_from_slice(&r.log_weights);
            tags.extend(r.batch.tags.iter().map(|&(n, k)| SampleTag { t: r.t, n, k }));
        }
        let iterations = records.iter().map(|r| r.t).max().unwrap_or(0);
        Self::new(dim, iterations, samples, log_weights, tags)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<F>] {
        &self.samples
    }

    pub fn log_weights(&self) -> &[F] {
        &self.log_weights
    }

    pub fn tags(&self) -> &[SampleTag] {
        &self.tags
    }

    /// True when every weight is zero.
    pub fn is_degenerate(&self) -> bool {
        self.log_weights.iter().all(|&w| w == F::neg_infinity())
    }

    fn filter(&self, keep: impl Fn(&SampleTag) -> bool) -> Self {
        let mut out = Self {
            dim: self.dim,
            iterations: self.iterations,
            samples: Vec::new(),
            log_weights: Vec::new(),
            tags: Vec::new(),
        };
        for ((x, &w), &tag) in self.samples.iter().zip(&self.log_weights).zip(&self.tags) {
            if keep(&tag) {
                out.samples.push(x.clone());
                out.log_weights.push(w);
                out.tags.push(tag);
            }
        }
        out
    }
}

/// Which iterations feed the estimators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    All,
    /// Iterations `t > ⌊T/2⌋`.
    #[default]
    LastHalf,
}

impl WindowPolicy {
    /// First iteration kept for a run of `iterations` steps.
    pub fn first_iteration(self, iterations: usize) -> usize {
        match self {
            WindowPolicy::All => 1,
            WindowPolicy::LastHalf => iterations / 2 + 1,
        }
    }
}

pub fn window_select<F: Real>(set: &WeightedSampleSet<F>, policy: WindowPolicy) -> Result<WeightedSampleSet<F>> {
    if set.iterations == 0 {
        return Err(Error::EmptyWindow);
    }
    let first = policy.first_iteration(set.iterations);
    let out = set.filter(|tag| tag.t >= first);
    if out.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(out)
}

type CustomFn<F> = dyn Fn(&[F]) -> Vec<F> + Send + Sync;

/// Integrand `h` of the estimators.
#[derive(Clone)]
pub enum TestFunction<F> {
    Identity,
    /// Componentwise `x_i²`.
    Square,
    Custom(Arc<CustomFn<F>>),
}

impl<F: Real> TestFunction<F> {
    pub fn custom(f: impl Fn(&[F]) -> Vec<F> + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn apply(&self, x: &[F]) -> Vec<F> {
        match self {
            TestFunction::Identity => x.to_vec(),
            TestFunction::Square => x.iter().map(|&v| v * v).collect(),
            TestFunction::Custom(f) => f(x),
        }
    }
}

impl<F> fmt::Debug for TestFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Identity => f.write_str("Identity"),
            TestFunction::Square => f.write_str("Square"),
            TestFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// `Σ exp(ℓ_i − shift) h(x_i)` together with the shift.
fn shifted_weighted_sum<F: Real>(set: &WeightedSampleSet<F>, h: &TestFunction<F>) -> Result<(F, Vec<F>)> {
    if set.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let shift = set.log_weights.iter().copied().fold(F::neg_infinity(), F::max);
    if shift == F::neg_infinity() {
        return Err(Error::DegenerateWeights);
    }
    let mut acc: Option<Vec<F>> = None;
    for (x, &lw) in set.samples.iter().zip(&set.log_weights) {
        let w = (lw - shift).exp();
        let hx = h.apply(x);
        let acc = acc.get_or_insert_with(|| vec![F::zero(); hx.len()]);
        check_dim(acc.len(), hx.len())?;
        if w == F::zero() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(hx) {
            *a += w * v;
        }
    }
    Ok((shift, acc.unwrap_or_default()))
}

/// Unnormalized estimate `(1/(M Z)) Σ w_i h(x_i)` over the `M` samples of the set.
pub fn uis_estimate<F: Real>(set: &WeightedSampleSet<F>, h: &TestFunction<F>, z: F) -> Result<Vec<F>> {
    if !(z > F::zero()) {
        return Err(Error::InvalidParameter("normalizing constant must be positive".into()));
    }
    let (shift, sum) = shifted_weighted_sum(set, h)?;
    let scale = (shift - F::from_usize(set.len()).unwrap().ln() - z.ln()).exp();
    Ok(sum.into_iter().map(|v| v * scale).collect())
}

/// `w_i / Σ_j w_j`.
pub fn normalized_weights<F: Real>(set: &WeightedSampleSet<F>) -> Result<Vec<F>> {
    let total = log_sum_exp(&set.log_weights).map_err(|_| Error::DegenerateWeights)?;
    Ok(set.log_weights.iter().map(|&w| (w - total).exp()).collect())
}

/// Self-normalized estimate `Σ w̃_i h(x_i)`.
pub fn snis_estimate<F: Real>(set: &WeightedSampleSet<F>, h: &TestFunction<F>) -> Result<Vec<F>> {
    if set.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let weights = normalized_weights(set)?;
    let mut acc: Option<Vec<F>> = None;
    for (x, w) in set.samples.iter().zip(weights) {
        let hx = h.apply(x);
        let acc = acc.get_or_insert_with(|| vec![F::zero(); hx.len()]);
        check_dim(acc.len(), hx.len())?;
        if w == F::zero() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(hx) {
            *a += w * v;
        }
    }
    Ok(acc.unwrap_or_default())
}

/// `Ẑ = (1/M) Σ w_i`; zero when every weight is zero.
pub fn z_estimate<F: Real>(set: &WeightedSampleSet<F>) -> Result<F> {
    if set.is_empty() {
        return Err(Error::EmptyWindow);
    }
    match log_mean_exp(&set.log_weights) {
        Ok(v) => Ok(v.exp()),
        Err(Error::AllNegInfinity) => Ok(F::zero()),
        Err(e) => Err(e),
    }
}

/// Monte Carlo estimate of `χ²(π̃, ψ) = E_ψ[(π̃/ψ)²] − 1` with `M` draws from
/// the equally weighted mixture `ψ` of the bank.
///
/// Floored at zero. Values above [`CHI2_OVERFLOW`], and mixtures whose
/// draws reach less than [`CHI2_COVERAGE_FLOOR`] of the target mass, are
/// reported as `+inf`.
pub fn chi2_estimate<F: Real, T: Target<F> + ?Sized>(
    target: &T,
    bank: &ProposalBank<F>,
    draws: usize,
    rng: &mut RngStream,
) -> Result<F> {
    let z = target.truth().normalizing_constant.ok_or(Error::RequiresKnownZ)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("χ² needs at least one draw".into()));
    }
    let log_z = z.ln();
    let two = F::lit(2.0);
    let mut ratios = Vec::with_capacity(draws);
    let mut doubled = Vec::with_capacity(draws);
    for _ in 0..draws {
        let n = rng.gen_range(0..bank.len());
        let x = bank.proposals()[n].sample(rng);
        let ratio = target.log_density(&x)? - log_z - bank.mixture_log_pdf(&x)?;
        ratios.push(ratio);
        doubled.push(two * ratio);
    }
    // E_ψ[π̃/ψ] is the target mass the mixture reaches. Draws from ψ cannot
    // see the rest, where π̃/ψ is astronomically large.
    let covered = log_mean_exp(&ratios).unwrap_or(F::neg_infinity());
    if covered < F::lit(CHI2_COVERAGE_FLOOR.ln()) {
        return Ok(F::infinity());
    }
    let second = match log_mean_exp(&doubled) {
        Ok(v) => v.exp(),
        Err(Error::AllNegInfinity) => F::zero(),
        Err(e) => return Err(e),
    };
    let chi2 = (second - F::one()).max(F::zero());
    Ok(if chi2 > F::lit(CHI2_OVERFLOW) || chi2.is_nan() {
        F::infinity()
    } else {
        chi2
    })
}

/// Estimates from one run over one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub z_hat: f64,
    pub snis_mean: Vec<f64>,
    pub snis_second_moment: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uis_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uis_second_moment: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi2: Option<f64>,
    /// Inclusive iteration range the estimates use.
    pub window: (usize, usize),
    /// Set when the run failed; the estimates are then NaN.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EstimateReport {
    /// Computes every estimator on the window. UIS estimates need `z`.
    pub fn from_window<F: Real>(
        set: &WeightedSampleSet<F>,
        policy: WindowPolicy,
        z: Option<F>,
    ) -> Result<Self> {
        let window = window_select(set, policy)?;
        let to64 = |v: Vec<F>| v.into_iter().map(F::as_f64).collect::<Vec<f64>>();
        let z_hat = z_estimate(&window)?.as_f64();
        let snis_mean = to64(snis_estimate(&window, &TestFunction::Identity)?);
        let snis_second_moment = to64(snis_estimate(&window, &TestFunction::Square)?);
        let (uis_mean, uis_second_moment) = match z {
            Some(z) => (
                Some(to64(uis_estimate(&window, &TestFunction::Identity, z)?)),
                Some(to64(uis_estimate(&window, &TestFunction::Square, z)?)),
            ),
            None => (None, None),
        };
        Ok(Self {
            z_hat,
            snis_mean,
            snis_second_moment,
            uis_mean,
            uis_second_moment,
            chi2: None,
            window: (policy.first_iteration(set.iterations()), set.iterations()),
            failure: None,
        })
    }

    pub fn failed(dim: usize, reason: impl Into<String>) -> Self {
        Self {
            z_hat: f64::NAN,
            snis_mean: vec![f64::NAN; dim],
            snis_second_moment: vec![f64::NAN; dim],
            uis_mean: None,
            uis_second_moment: None,
            chi2: None,
            window: (0, 0),
            failure: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure.is_some() || !self.z_hat.is_finite()
    }

    fn moments(&self, estimator: MomentEstimator) -> Option<(&[f64], &[f64])> {
        match estimator {
            MomentEstimator::Snis => Some((&self.snis_mean, &self.snis_second_moment)),
            MomentEstimator::Uis => Some((self.uis_mean.as_deref()?, self.uis_second_moment.as_deref()?)),
        }
    }
}

/// Estimator whose moment estimates are scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentEstimator {
    #[default]
    Snis,
    Uis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Z,
    Mean,
    SecondMoment,
    Chi2,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Z, Metric::Mean, Metric::SecondMoment, Metric::Chi2];
}

/// Errors aggregated over independent runs.
///
/// RMSE of a vector quantity is `sqrt(mean over runs of ‖estimate − truth‖²)`;
/// the `*_mse_per_coordinate` fields divide the squared norm by the dimension.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RmseTable {
    pub z: Option<f64>,
    pub mean: Option<f64>,
    pub second_moment: Option<f64>,
    pub mean_mse_per_coordinate: Option<f64>,
    pub second_moment_mse_per_coordinate: Option<f64>,
    /// Average χ² over the runs that report one.
    pub chi2: Option<f64>,
    pub runs_used: usize,
    pub runs_failed: usize,
}

fn squared_error(est: &[f64], truth: &[f64]) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rmse_aggregate<F: Real>(
    reports: &[EstimateReport],
    truth: &GroundTruth<F>,
    metrics: &[Metric],
    estimator: MomentEstimator,
) -> Result<RmseTable> {
    if reports.is_empty() {
        return Err(Error::InvalidParameter("no reports to aggregate".into()));
    }
    let to64 = |v: &Vec<F>| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
    let z = truth.normalizing_constant.map(F::as_f64);
    let mean = truth.mean.as_ref().map(to64);
    let second = truth.second_moment.as_ref().map(to64);
    for m in metrics {
        match m {
            Metric::Z if z.is_none() => return Err(Error::MissingTruth("normalizing constant")),
            Metric::Mean if mean.is_none() => return Err(Error::MissingTruth("mean")),
            Metric::SecondMoment if second.is_none() => return Err(Error::MissingTruth("second moment")),
            _ => {}
        }
    }

    let used: Vec<&EstimateReport> = reports.iter().filter(|r| !r.is_failed()).collect();
    let mut table = RmseTable {
        runs_used: used.len(),
        runs_failed: reports.len() - used.len(),
        ..Default::default()
    };
    if used.is_empty() {
        return Ok(table);
    }
    let count = used.len() as f64;
    let avg = |f: &dyn Fn(&EstimateReport) -> f64| used.iter().map(|r| f(r)).sum::<f64>() / count;

    if metrics.contains(&Metric::Z) {
        let z = z.unwrap();
        table.z = Some(avg(&|r| (r.z_hat - z).powi(2)).sqrt());
    }
    let pick = |r: &EstimateReport| -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, s) = r
            .moments(estimator)
            .ok_or_else(|| Error::InvalidParameter("report lacks UIS estimates".into()))?;
        Ok((m.to_vec(), s.to_vec()))
    };
    let moments = used.iter().map(|r| pick(r)).collect::<Result<Vec<_>>>()?;
    if metrics.contains(&Metric::Mean) {
        let truth = mean.as_ref().unwrap();
        let mse = moments.iter().map(|(m, _)| squared_error(m, truth)).sum::<f64>() / count;
        table.mean = Some(mse.sqrt());
        table.mean_mse_per_coordinate = Some(mse / truth.len() as f64);
    }
    if metrics.contains(&Metric::SecondMoment) {
        let truth = second.as_ref().unwrap();
        let mse = moments.iter().map(|(_, s)| squared_error(s, truth)).sum::<f64>() / count;
        table.second_moment = Some(mse.sqrt());
        table.second_moment_mse_per_coordinate = Some(mse / truth.len() as f64);
    }
    if metrics.contains(&Metric::Chi2) {
        let values: Vec<f64> = used.iter().filter_map(|r| r.chi2).collect();
        if !values.is_empty() {
            table.chi2 = Some(values.iter().sum::<f64>() / values.len() as f64);
        }
    }
    Ok(table)
}
