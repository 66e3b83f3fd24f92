//! The bank of adapted Gaussian proposals and its equally weighted mixture.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{log_mean_exp, log_mvn_pdf, sample_mvn, spd_factorize, Matrix, RngStream, SpdFactor};
use crate::scalar::Real;

/// Gaussian proposal `N(mean, cov)` with its Cholesky factor cached.
#[derive(Clone, Debug)]
pub struct GaussianProposal<F> {
    mean: Vec<F>,
    cov: Matrix<F>,
    factor: SpdFactor<F>,
    /// Non-adapted parameters, carried through untouched.
    pub extra: Vec<F>,
}

impl<F: Real> GaussianProposal<F> {
    pub fn new(mean: Vec<F>, cov: Matrix<F>) -> Result<Self> {
        check_dim(mean.len(), cov.dim())?;
        let factor = spd_factorize(&cov)?;
        Ok(Self {
            mean,
            cov: cov.symmetrized(),
            factor,
            extra: Vec::new(),
        })
    }

    pub fn mean(&self) -> &[F] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<F> {
        &self.cov
    }

    pub fn factor(&self) -> &SpdFactor<F> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn set_mean(&mut self, mean: Vec<F>) -> Result<()> {
        check_dim(self.dim(), mean.len())?;
        self.mean = mean;
        Ok(())
    }

    /// Replaces the covariance; the cached factor is refreshed with it.
    pub fn set_cov(&mut self, cov: Matrix<F>) -> Result<()> {
        check_dim(self.dim(), cov.dim())?;
        self.factor = spd_factorize(&cov)?;
        self.cov = cov.symmetrized();
        Ok(())
    }

    /// Installs a covariance whose factor is already known.
    pub(crate) fn set_factored(&mut self, cov: Matrix<F>, factor: SpdFactor<F>) {
        debug_assert_eq!(cov.dim(), self.dim());
        self.cov = cov;
        self.factor = factor;
    }

    pub fn log_pdf(&self, x: &[F]) -> Result<F> {
        log_mvn_pdf(x, &self.mean, &self.factor)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<F> {
        sample_mvn(&self.mean, &self.factor, rng)
    }
}

/// Samples drawn from a bank, stored in `(n, k)` row order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<F> {
    pub samples: Vec<Vec<F>>,
    /// `(proposal n, draw k)` for each sample.
    pub tags: Vec<(usize, usize)>,
}

impl<F> SampleBatch<F> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The `N` proposals adapted jointly, at iteration `iteration`.
#[derive(Clone, Debug)]
pub struct ProposalBank<F> {
    proposals: Vec<GaussianProposal<F>>,
    pub iteration: usize,
}

impl<F: Real> ProposalBank<F> {
    pub fn new(proposals: Vec<GaussianProposal<F>>) -> Result<Self> {
        let first = proposals
            .first()
            .ok_or_else(|| Error::InvalidParameter("bank needs at least one proposal".into()))?;
        let d = first.dim();
        for p in &proposals {
            check_dim(d, p.dim())?;
        }
        Ok(Self {
            proposals,
            iteration: 0,
        })
    }

    /// Means drawn uniformly on the box `[low, high]`, every covariance `init_cov`.
    pub fn init(
        low: &[F],
        high: &[F],
        n: usize,
        init_cov: &Matrix<F>,
        rng: &mut RngStream,
    ) -> Result<Self> {
        check_dim(low.len(), high.len())?;
        check_dim(low.len(), init_cov.dim())?;
        if n == 0 {
            return Err(Error::InvalidParameter("bank needs at least one proposal".into()));
        }
        for (i, (&lo, &hi)) in low.iter().zip(high).enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidBox(format!("coordinate {i}: [{lo}, {hi}]")));
            }
        }
        let factor = spd_factorize(init_cov)?;
        let cov = init_cov.symmetrized();
        let proposals = (0..n)
            .map(|_| {
                let mean = low
                    .iter()
                    .zip(high)
                    .map(|(&lo, &hi)| lo + (hi - lo) * F::unit_uniform(rng))
                    .collect();
                GaussianProposal {
                    mean,
                    cov: cov.clone(),
                    factor: factor.clone(),
                    extra: Vec::new(),
                }
            })
            .collect();
        Self::new(proposals)
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.proposals[0].dim()
    }

    pub fn proposals(&self) -> &[GaussianProposal<F>] {
        &self.proposals
    }

    pub fn proposals_mut(&mut self) -> &mut [GaussianProposal<F>] {
        &mut self.proposals
    }

    pub fn means(&self) -> Vec<Vec<F>> {
        self.proposals.iter().map(|p| p.mean.clone()).collect()
    }

    /// Draws `k` samples from every proposal; proposal `n` consumes `streams[n]`.
    pub fn sample(&self, k: usize, streams: &mut [RngStream]) -> Result<SampleBatch<F>> {
        check_dim(self.len(), streams.len())?;
        let mut samples = Vec::with_capacity(self.len() * k);
        let mut tags = Vec::with_capacity(self.len() * k);
        for (n, (p, rng)) in self.proposals.iter().zip(streams.iter_mut()).enumerate() {
            for j in 0..k {
                samples.push(p.sample(rng));
                tags.push((n, j));
            }
        }
        Ok(SampleBatch { samples, tags })
    }

    /// `ln((1/N) Σ_j q_j(x))`.
    pub fn mixture_log_pdf(&self, x: &[F]) -> Result<F> {
        let logs = self
            .proposals
            .iter()
            .map(|p| p.log_pdf(x))
            .collect::<Result<Vec<F>>>()?;
        log_mean_exp(&logs)
    }
}
