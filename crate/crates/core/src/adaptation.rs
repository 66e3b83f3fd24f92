//! Proposal adaptation: backtracked Newton moves of the means, repulsion
//! between means, safe-rule covariance updates, and deterministic-mixture
//! importance weighting.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numerics::{ln_gamma, norm, spd_factorize, sub, Matrix, RngStream, SpdFactor};
use crate::proposals::{ProposalBank, SampleBatch};
use crate::scalar::Real;
use crate::targets::Target;

/// Pairwise distances below this are clamped before the power in the repulsion.
pub const DEFAULT_DISTANCE_FLOOR: f64 = 1e-9;
/// Fraction of the first-iteration repulsion left at the last iteration.
pub const DEFAULT_ATTENUATION: f64 = 0.01;
pub const DEFAULT_MAX_HALVINGS: u32 = 30;
pub const DEFAULT_FIXED_STEP: f64 = 0.1;

/// Repulsion strength `G_t` over iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Off,
    Constant {
        g: f64,
    },
    /// `G_t = g1 · exp(−β (t − 1))`. Without an explicit `beta`, β is chosen so
    /// that `G_T = DEFAULT_ATTENUATION · g1`.
    Exponential {
        g1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
}

/// `β = −ln(attenuation) / (T − 1)`.
pub fn attenuation_rate(attenuation: f64, iterations: usize) -> f64 {
    if iterations <= 1 {
        return 0.0;
    }
    -attenuation.ln() / (iterations - 1) as f64
}

fn default_floor() -> f64 {
    DEFAULT_DISTANCE_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepulsionConfig {
    pub schedule: Schedule,
    /// Per-proposal masses `m_n`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default = "default_floor")]
    pub distance_floor: f64,
    /// Switch the repulsion off in the last iteration.
    #[serde(default)]
    pub zero_at_last: bool,
}

impl RepulsionConfig {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            masses: None,
            distance_floor: DEFAULT_DISTANCE_FLOOR,
            zero_at_last: false,
        }
    }

    pub fn off() -> Self {
        Self::new(Schedule::Off)
    }

    fn validate(&self, proposals: usize) -> Result<()> {
        match self.schedule {
            Schedule::Off => {}
            Schedule::Constant { g } if !(g >= 0.0) => {
                return Err(Error::Config(format!("repulsion strength {g} must be >= 0")))
            }
            Schedule::Exponential { g1, beta } => {
                if !(g1 >= 0.0) {
                    return Err(Error::Config(format!("repulsion strength {g1} must be >= 0")));
                }
                if let Some(b) = beta {
                    if !(b > 0.0) {
                        return Err(Error::Config(format!("decay rate {b} must be > 0")));
                    }
                }
            }
            Schedule::Constant { .. } => {}
        }
        if !(self.distance_floor > 0.0) {
            return Err(Error::Config("distance floor must be > 0".into()));
        }
        if let Some(m) = &self.masses {
            if m.len() != proposals {
                return Err(Error::Config(format!(
                    "{} masses for {proposals} proposals",
                    m.len()
                )));
            }
            if m.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Config("masses must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `G_t` at iteration `t` of `iterations` (1-based).
pub fn schedule_value(cfg: &RepulsionConfig, t: usize, iterations: usize) -> f64 {
    if cfg.zero_at_last && t == iterations {
        return 0.0;
    }
    match cfg.schedule {
        Schedule::Off => 0.0,
        Schedule::Constant { g } => g,
        Schedule::Exponential { g1, beta } => {
            let beta = beta.unwrap_or_else(|| attenuation_rate(DEFAULT_ATTENUATION, iterations));
            g1 * (-beta * (t as f64 - 1.0)).exp()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktrackConfig {
    pub max_halvings: u32,
    pub initial_step: f64,
}

impl Default for BacktrackConfig {
    fn default() -> Self {
        Self {
            max_halvings: DEFAULT_MAX_HALVINGS,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCovMode {
    /// `σ² I`.
    #[default]
    Isotropic,
    /// Safe rule at the initial means, falling back to `σ² I`.
    Hessian,
}

/// Weighting of each sample against the proposals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `π(x) / ((1/N) Σ_j q_j(x))`.
    #[default]
    DeterministicMixture,
    /// `π(x) / q_n(x)` for a sample drawn from proposal `n`.
    Standard,
}

/// Either one value for every coordinate or explicit per-coordinate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Bound {
    pub fn resolve(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            Bound::Uniform(v) => Ok(vec![*v; dim]),
            Bound::PerCoordinate(v) if v.len() == dim => Ok(v.clone()),
            Bound::PerCoordinate(v) => Err(Error::InvalidBox(format!(
                "{} bounds for a {dim}-dimensional target",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitBox {
    pub low: Bound,
    pub high: Bound,
}

impl InitBox {
    pub fn cube(low: f64, high: f64) -> Self {
        Self {
            low: Bound::Uniform(low),
            high: Bound::Uniform(high),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_fixed_step() -> f64 {
    DEFAULT_FIXED_STEP
}

/// Parameters of one adaptive run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramisConfig {
    /// Number of proposals `N`.
    pub proposals: usize,
    /// Samples per proposal and iteration `K`.
    pub samples_per_proposal: usize,
    /// Number of iterations `T`.
    pub iterations: usize,
    pub repulsion: RepulsionConfig,
    #[serde(default)]
    pub backtrack: BacktrackConfig,
    pub init_box: InitBox,
    /// Initial proposal covariance is `init_sigma² I`.
    pub init_sigma: f64,
    #[serde(default)]
    pub init_cov_mode: InitCovMode,
    /// Newton preconditioning by the proposal covariance; when off the
    /// gradient step uses `fixed_step · I` instead.
    #[serde(default = "default_true")]
    pub precondition: bool,
    #[serde(default = "default_fixed_step")]
    pub fixed_step: f64,
    #[serde(default)]
    pub weighting: Weighting,
}

impl GramisConfig {
    pub fn new(proposals: usize, samples_per_proposal: usize, iterations: usize, init_box: InitBox) -> Self {
        Self {
            proposals,
            samples_per_proposal,
            iterations,
            repulsion: RepulsionConfig::off(),
            backtrack: BacktrackConfig::default(),
            init_box,
            init_sigma: 1.0,
            init_cov_mode: InitCovMode::Isotropic,
            precondition: true,
            fixed_step: DEFAULT_FIXED_STEP,
            weighting: Weighting::DeterministicMixture,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.proposals == 0 || self.samples_per_proposal == 0 || self.iterations == 0 {
            return Err(Error::Config("N, K and T must all be at least 1".into()));
        }
        if !(self.init_sigma > 0.0) {
            return Err(Error::Config("init_sigma must be > 0".into()));
        }
        if !(self.fixed_step > 0.0) {
            return Err(Error::Config("fixed_step must be > 0".into()));
        }
        if self.backtrack.max_halvings == 0 || !(self.backtrack.initial_step > 0.0) {
            return Err(Error::Config("backtracking needs max_halvings >= 1 and a positive step".into()));
        }
        self.repulsion.validate(self.proposals)
    }

    fn masses<F: Real>(&self) -> Vec<F> {
        match &self.repulsion.masses {
            Some(m) => m.iter().map(|&v| F::lit(v)).collect(),
            None => vec![F::one(); self.proposals],
        }
    }
}

/// `Σ_{j≠n} G m_n m_j d_{n,j} / ‖d_{n,j}‖^{d}` with `d_{n,j} = μ_n − μ_j`
/// and distances clamped below by `floor`.
pub fn repulsion_sum<F: Real>(means: &[Vec<F>], n: usize, strength: F, masses: &[F], floor: F) -> Vec<F> {
    let d = means[n].len();
    let mut out = vec![F::zero(); d];
    if strength == F::zero() || means.len() < 2 {
        return out;
    }
    let exponent = d as i32;
    for (j, other) in means.iter().enumerate() {
        if j == n {
            continue;
        }
        let diff = sub(&means[n], other);
        let dist = norm(&diff).max(floor);
        let coeff = strength * (masses[n] * masses[j]) / dist.powi(exponent);
        for (o, &v) in out.iter_mut().zip(&diff) {
            *o += coeff * v;
        }
    }
    out
}

/// Empirical Poisson field at `μ_n` sourced by the other means:
/// `(1/(N−1)) Σ_{j≠n} Γ(d/2)/(2π^{d/2}) · d_{n,j} / ‖d_{n,j}‖^d`.
pub fn poisson_field<F: Real>(means: &[Vec<F>], n: usize) -> Result<Vec<F>> {
    let count = means.len();
    if count < 2 {
        return Err(Error::InvalidParameter("the field needs at least two means".into()));
    }
    let d = means[n].len();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let half = d as f64 / 2.0;
    let kernel = F::lit((ln_gamma(half) - std::f64::consts::LN_2 - half * std::f64::consts::PI.ln()).exp());
    let mut out = vec![F::zero(); d];
    for (j, other) in means.iter().enumerate() {
        check_dim(d, other.len())?;
        if j == n {
            continue;
        }
        let diff = sub(&means[n], other);
        let coeff = kernel / norm(&diff).powi(d as i32);
        for (o, &v) in out.iter_mut().zip(&diff) {
            *o += coeff * v;
        }
    }
    let scale = F::one() / F::from_usize(count - 1).unwrap();
    Ok(out.into_iter().map(|v| v * scale).collect())
}

/// Accepted step of the backtracking search.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<F> {
    /// Accepted step size; zero when every halving failed.
    pub theta: F,
    /// `μ + θ P ∇ln π(μ)`.
    pub point: Vec<F>,
}

/// Halves `θ` from `cfg.initial_step` until `ln π(μ + θ P ∇ln π(μ)) ≥ ln π(μ)`.
pub fn backtrack_stepsize<F: Real, T: Target<F> + ?Sized>(
    target: &T,
    mean: &[F],
    precond: &Matrix<F>,
    cfg: &BacktrackConfig,
) -> Result<Step<F>> {
    let grad = target.grad_log_density(mean)?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let direction = precond.mul_vec(&grad)?;
    let base = target.log_density(mean)?;
    let half = F::lit(0.5);
    let mut theta = F::lit(cfg.initial_step);
    for _ in 0..=cfg.max_halvings {
        let point: Vec<F> = mean.iter().zip(&direction).map(|(&m, &v)| m + theta * v).collect();
        // NaN compares false and counts as a failed trial
        if target.log_density(&point).is_ok_and(|lp| lp >= base) {
            return Ok(Step { theta, point });
        }
        theta *= half;
    }
    Ok(Step {
        theta: F::zero(),
        point: mean.to_vec(),
    })
}

/// New means, all computed from the same snapshot of the bank.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanUpdate<F> {
    pub means: Vec<Vec<F>>,
    pub steps: Vec<F>,
}

/// `μ_n ← μ_n + θ_n P_n ∇ln π(μ_n) + Σ_{j≠n} r_{n,j}` for every proposal,
/// where `P_n = Σ_n` when preconditioning and `fixed_step · I` otherwise.
pub fn adapt_means<F: Real, T: Target<F> + ?Sized>(
    bank: &ProposalBank<F>,
    target: &T,
    strength: F,
    cfg: &GramisConfig,
) -> Result<MeanUpdate<F>> {
    let snapshot = bank.means();
    let masses = cfg.masses::<F>();
    check_dim(bank.len(), masses.len())?;
    let floor = F::lit(cfg.repulsion.distance_floor);
    let fixed = (!cfg.precondition).then(|| Matrix::scaled_identity(bank.dim(), F::lit(cfg.fixed_step)));

    let mut means = Vec::with_capacity(bank.len());
    let mut steps = Vec::with_capacity(bank.len());
    for (n, p) in bank.proposals().iter().enumerate() {
        let precond = fixed.as_ref().unwrap_or(p.cov());
        let step = backtrack_stepsize(target, p.mean(), precond, &cfg.backtrack)?;
        let push = repulsion_sum(&snapshot, n, strength, &masses, floor);
        let mut mean = step.point;
        for (m, r) in mean.iter_mut().zip(push) {
            *m += r;
        }
        means.push(mean);
        steps.push(step.theta);
    }
    Ok(MeanUpdate { means, steps })
}

/// Which branch of the covariance safe rule was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafeRule {
    /// Inverse negative Hessian of the log-target.
    Hessian,
    /// Previous covariance kept.
    Fallback,
}

/// `(−∇² ln π(μ))⁻¹` when it is positive definite (and so is its inverse),
/// `None` otherwise.
pub fn newton_covariance<F: Real, T: Target<F> + ?Sized>(
    target: &T,
    mean: &[F],
) -> Option<(Matrix<F>, SpdFactor<F>)> {
    let hess = target.hessian_log_density(mean).ok()?;
    let neg = hess.scaled(-F::one());
    let cov = spd_factorize(&neg).ok()?.inverse();
    let factor = spd_factorize(&cov).ok()?;
    Some((cov, factor))
}

/// Applies the safe rule to every proposal at its current mean.
pub fn adapt_covariances<F: Real, T: Target<F> + ?Sized>(
    bank: &mut ProposalBank<F>,
    target: &T,
) -> Vec<SafeRule> {
    bank.proposals_mut()
        .iter_mut()
        .map(|p| match newton_covariance(target, p.mean()) {
            Some((cov, factor)) => {
                p.set_factored(cov, factor);
                SafeRule::Hessian
            }
            None => SafeRule::Fallback,
        })
        .collect()
}

/// `ln π(x) − ln((1/N) Σ_j q_j(x))` for every sample of the batch.
pub fn dm_mis_log_weights<F: Real, T: Target<F> + ?Sized>(
    bank: &ProposalBank<F>,
    batch: &SampleBatch<F>,
    target: &T,
) -> Result<Vec<F>> {
    log_weights(bank, batch, target, Weighting::DeterministicMixture)
}

pub fn log_weights<F: Real, T: Target<F> + ?Sized>(
    bank: &ProposalBank<F>,
    batch: &SampleBatch<F>,
    target: &T,
    weighting: Weighting,
) -> Result<Vec<F>> {
    let weights = batch
        .samples
        .iter()
        .zip(&batch.tags)
        .map(|(x, &(n, _))| {
            let denom = match weighting {
                Weighting::DeterministicMixture => bank.mixture_log_pdf(x)?,
                Weighting::Standard => bank.proposals()[n].log_pdf(x)?,
            };
            Ok(target.log_density(x)? - denom)
        })
        .collect::<Result<Vec<F>>>()?;
    if !weights.is_empty() && weights.iter().all(|&w| w == F::neg_infinity()) {
        return Err(Error::DegenerateWeights);
    }
    Ok(weights)
}

/// State of the bank and the weighted samples produced at one iteration.
#[derive(Clone, Debug)]
pub struct IterationRecord<F> {
    pub t: usize,
    pub means: Vec<Vec<F>>,
    pub covariances: Vec<Matrix<F>>,
    /// Accepted backtracking step per proposal.
    pub steps: Vec<F>,
    pub branches: Vec<SafeRule>,
    pub repulsion_strength: F,
    pub batch: SampleBatch<F>,
    pub log_weights: Vec<F>,
}

/// Iterates the adaptive scheme one step at a time.
pub struct Gramis<'a, F, T: ?Sized> {
    target: &'a T,
    cfg: GramisConfig,
    bank: ProposalBank<F>,
    streams: Vec<RngStream>,
    t: usize,
}

impl<'a, F: Real, T: Target<F> + ?Sized> Gramis<'a, F, T> {
    /// Validates the configuration and places the initial bank.
    ///
    /// Randomness comes from `seed`: one stream for the initial means and one
    /// per proposal for its samples.
    pub fn new(target: &'a T, cfg: GramisConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let dim = target.dim();
        let low: Vec<F> = cfg.init_box.low.resolve(dim)?.into_iter().map(F::lit).collect();
        let high: Vec<F> = cfg.init_box.high.resolve(dim)?.into_iter().map(F::lit).collect();
        let sigma = F::lit(cfg.init_sigma);
        let init_cov = Matrix::scaled_identity(dim, sigma * sigma);
        let mut bank = ProposalBank::init(&low, &high, cfg.proposals, &init_cov, &mut RngStream::for_init(seed))?;
        if cfg.init_cov_mode == InitCovMode::Hessian {
            adapt_covariances(&mut bank, target);
        }
        let streams = (0..cfg.proposals).map(|n| RngStream::for_proposal(seed, n)).collect();
        Ok(Self {
            target,
            cfg,
            bank,
            streams,
            t: 0,
        })
    }

    pub fn bank(&self) -> &ProposalBank<F> {
        &self.bank
    }

    pub fn config(&self) -> &GramisConfig {
        &self.cfg
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.cfg.iterations
    }

    /// Mean adaptation, covariance adaptation, sampling, and weighting.
    pub fn step(&mut self) -> Result<IterationRecord<F>> {
        self.t += 1;
        let t = self.t;
        let strength = F::lit(schedule_value(&self.cfg.repulsion, t, self.cfg.iterations));

        let update = adapt_means(&self.bank, self.target, strength, &self.cfg)?;
        for (p, m) in self.bank.proposals_mut().iter_mut().zip(update.means) {
            p.set_mean(m)?;
        }
        let branches = adapt_covariances(&mut self.bank, self.target);
        self.bank.iteration = t;

        let batch = self.bank.sample(self.cfg.samples_per_proposal, &mut self.streams)?;
        let log_weights = log_weights(&self.bank, &batch, self.target, self.cfg.weighting)?;
        Ok(IterationRecord {
            t,
            means: self.bank.means(),
            covariances: self.bank.proposals().iter().map(|p| p.cov().clone()).collect(),
            steps: update.steps,
            branches,
            repulsion_strength: strength,
            batch,
            log_weights,
        })
    }

    pub fn into_bank(self) -> ProposalBank<F> {
        self.bank
    }
}

/// A finished run: one record per iteration and the final bank.
#[derive(Clone, Debug)]
pub struct GramisRun<F> {
    pub records: Vec<IterationRecord<F>>,
    pub bank: ProposalBank<F>,
}

/// Runs all `T` iterations.
pub fn run_gramis<F: Real, T: Target<F> + ?Sized>(target: &T, cfg: &GramisConfig, seed: u64) -> Result<GramisRun<F>> {
    let mut sampler = Gramis::new(target, cfg.clone(), seed)?;
    let mut records = Vec::with_capacity(cfg.iterations);
    while !sampler.is_done() {
        records.push(sampler.step()?);
    }
    Ok(GramisRun {
        records,
        bank: sampler.into_bank(),
    })
}
