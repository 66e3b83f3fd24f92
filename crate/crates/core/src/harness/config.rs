use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::TargetSpec;
use crate::adaptation::GramisConfig;
use crate::error::{Error, Result};
use crate::estimators::{Metric, MomentEstimator, RmseTable, WindowPolicy, DEFAULT_CHI2_SAMPLES};

/// Run count used by quick mode.
pub const QUICK_RUNS: usize = 20;

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

fn default_chi2_samples() -> usize {
    DEFAULT_CHI2_SAMPLES
}

/// Upper bounds checked by `--verify`. Unset bounds are not checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_moment_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_mse_per_coordinate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi2: Option<f64>,
}

impl Thresholds {
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: Option<f64>| v.map(|x| x * factor);
        Self {
            z_rmse: s(self.z_rmse),
            mean_rmse: s(self.mean_rmse),
            second_moment_rmse: s(self.second_moment_rmse),
            mean_mse_per_coordinate: s(self.mean_mse_per_coordinate),
            chi2: s(self.chi2),
        }
    }

    /// One message per violated bound. A missing value violates its bound.
    pub fn check(&self, table: &RmseTable) -> Vec<String> {
        let pairs = [
            ("z_rmse", self.z_rmse, table.z),
            ("mean_rmse", self.mean_rmse, table.mean),
            ("second_moment_rmse", self.second_moment_rmse, table.second_moment),
            ("mean_mse_per_coordinate", self.mean_mse_per_coordinate, table.mean_mse_per_coordinate),
            ("chi2", self.chi2, table.chi2),
        ];
        pairs
            .into_iter()
            .filter_map(|(name, bound, value)| match (bound, value) {
                (Some(b), Some(v)) if v <= b => None,
                (Some(b), Some(v)) => Some(format!("{name} = {v:.6e} exceeds {b:.6e}")),
                (Some(_), None) => Some(format!("{name} was not computed")),
                (None, _) => None,
            })
            .collect()
    }
}

/// Regular 2-D grid of log-density values exported with traces.
///
/// For targets with more than two coordinates the remaining ones are held at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub low: [f64; 2],
    pub high: [f64; 2],
    pub points: usize,
}

impl GridSpec {
    pub fn for_target(target: &TargetSpec) -> Self {
        let (low, high) = target.extent();
        Self {
            low: [low[0], low[1]],
            high: [high[0], high[1]],
            points: 100,
        }
    }
}

/// One experiment: a target, a sampler configuration, and replication settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub target: TargetSpec,
    pub gramis: GramisConfig,
    /// Independent runs `R`; run `r` uses seed `base_seed + r`.
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub moment_estimator: MomentEstimator,
    #[serde(default)]
    pub window: WindowPolicy,
    #[serde(default = "default_chi2_samples")]
    pub chi2_samples: usize,
    /// Defaults to a box around the target mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    /// Output directory; the CLI's `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, target: TargetSpec, gramis: GramisConfig, runs: usize) -> Self {
        Self {
            name: name.into(),
            target,
            gramis,
            runs,
            base_seed: 0,
            metrics: default_metrics(),
            moment_estimator: MomentEstimator::default(),
            window: WindowPolicy::default(),
            chi2_samples: DEFAULT_CHI2_SAMPLES,
            grid: None,
            thresholds: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        self.gramis.validate()?;
        let dim = self.target.dim();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        self.gramis.init_box.low.resolve(dim)?;
        self.gramis.init_box.high.resolve(dim)?;
        if self.metrics.contains(&Metric::Chi2) && self.chi2_samples == 0 {
            return Err(Error::Config("chi2 needs chi2_samples ≥ 1".into()));
        }
        if let Some(g) = &self.grid {
            if dim < 2 || g.points < 2 || !(g.low[0] < g.high[0] && g.low[1] < g.high[1]) {
                return Err(Error::Config("grid needs a 2-D target, ≥ 2 points and low < high".into()));
            }
        }
        Ok(())
    }

    /// Quick mode: at most [`QUICK_RUNS`] runs, thresholds widened by
    /// `sqrt(R / QUICK_RUNS)`.
    pub fn quick(mut self) -> Self {
        if self.runs > QUICK_RUNS {
            let factor = (self.runs as f64 / QUICK_RUNS as f64).sqrt();
            self.thresholds = self.thresholds.map(|t| t.scaled(factor));
            self.runs = QUICK_RUNS;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
