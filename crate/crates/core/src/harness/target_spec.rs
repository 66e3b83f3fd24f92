use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::targets::{Banana, GaussianMixture, GgMixture, Target, DEFAULT_SMOOTHING};

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

/// Serializable description of a target density.
///
/// Mixture weights default to uniform when omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetSpec {
    GaussianMixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
    },
    GgMixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        means: Vec<Vec<f64>>,
        scales: Vec<Vec<Vec<f64>>>,
        shapes: Vec<f64>,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    Banana {
        dim: usize,
        b: f64,
        c: f64,
    },
}

pub const FIVE_MEANS: [[f64; 2]; 5] = [[-10.0, -10.0], [0.0, 16.0], [13.0, 8.0], [-9.0, 7.0], [14.0, -4.0]];

fn matrices(rows: &[Vec<Vec<f64>>]) -> Result<Vec<Matrix<f64>>> {
    rows.iter().map(|m| Matrix::from_rows(m)).collect()
}

fn uniform_weights(weights: &Option<Vec<f64>>, count: usize) -> Vec<f64> {
    weights.clone().unwrap_or_else(|| vec![1.0 / count as f64; count])
}

impl TargetSpec {
    /// Two well separated Gaussians.
    pub fn toy() -> Self {
        TargetSpec::GaussianMixture {
            weights: None,
            means: vec![vec![-5.0, -5.0], vec![6.0, 4.0]],
            covariances: vec![
                vec![vec![0.25, 0.0], vec![0.0, 0.25]],
                vec![vec![0.52, 0.48], vec![0.48, 0.52]],
            ],
        }
    }

    /// Five-mode Gaussian mixture.
    pub fn gm5() -> Self {
        TargetSpec::GaussianMixture {
            weights: None,
            means: FIVE_MEANS.iter().map(|m| m.to_vec()).collect(),
            covariances: vec![
                vec![vec![5.0, 2.0], vec![2.0, 5.0]],
                vec![vec![2.0, -1.3], vec![-1.3, 2.0]],
                vec![vec![2.0, 0.8], vec![0.8, 2.0]],
                vec![vec![3.0, 1.2], vec![1.2, 0.5]],
                vec![vec![0.2, -0.1], vec![-0.1, 0.2]],
            ],
        }
    }

    /// Five-mode generalized Gaussian mixture with unit scales and a common shape.
    pub fn gg5(shape: f64) -> Self {
        TargetSpec::GgMixture {
            weights: None,
            means: FIVE_MEANS.iter().map(|m| m.to_vec()).collect(),
            scales: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 5],
            shapes: vec![shape; 5],
            smoothing: DEFAULT_SMOOTHING,
        }
    }

    pub fn banana(dim: usize) -> Self {
        TargetSpec::Banana { dim, b: 3.0, c: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::GaussianMixture { means, .. } | TargetSpec::GgMixture { means, .. } => {
                means.first().map_or(0, Vec::len)
            }
            TargetSpec::Banana { dim, .. } => *dim,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            TargetSpec::GaussianMixture { .. } => "gaussian_mixture",
            TargetSpec::GgMixture { .. } => "gg_mixture",
            TargetSpec::Banana { .. } => "banana",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Target<f64>>> {
        Ok(match self {
            TargetSpec::GaussianMixture {
                weights,
                means,
                covariances,
            } => Box::new(GaussianMixture::new(
                uniform_weights(weights, means.len()),
                means.clone(),
                matrices(covariances)?,
            )?),
            TargetSpec::GgMixture {
                weights,
                means,
                scales,
                shapes,
                smoothing,
            } => Box::new(GgMixture::new(
                uniform_weights(weights, means.len()),
                means.clone(),
                matrices(scales)?,
                shapes.clone(),
                *smoothing,
            )?),
            TargetSpec::Banana { dim, b, c } => Box::new(Banana::new(*dim, *b, *c)?),
        })
    }

    /// Same family in another dimension. Only the banana family is resizable.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match self {
            TargetSpec::Banana { b, c, .. } => Ok(TargetSpec::Banana { dim, b: *b, c: *c }),
            _ => Err(Error::Config(format!("the {} family has a fixed dimension", self.family()))),
        }
    }

    /// Points that finite differences must stay away from (non-smooth means).
    pub fn singular_points(&self) -> Vec<Vec<f64>> {
        match self {
            TargetSpec::GgMixture { means, shapes, .. } => means
                .iter()
                .zip(shapes)
                .filter(|(_, &eta)| eta < 1.0)
                .map(|(m, _)| m.clone())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Box holding most of the target mass, per coordinate.
    pub fn extent(&self) -> (Vec<f64>, Vec<f64>) {
        let spread = |means: &[Vec<f64>], covs: &[Vec<Vec<f64>>], width: f64| {
            let d = means.first().map_or(0, Vec::len);
            let mut low = vec![f64::INFINITY; d];
            let mut high = vec![f64::NEG_INFINITY; d];
            for (m, c) in means.iter().zip(covs) {
                for i in 0..d {
                    let s = width * c[i][i].sqrt();
                    low[i] = low[i].min(m[i] - s);
                    high[i] = high[i].max(m[i] + s);
                }
            }
            (low, high)
        };
        match self {
            TargetSpec::GaussianMixture { means, covariances, .. } => spread(means, covariances, 4.0),
            TargetSpec::GgMixture { means, scales, .. } => spread(means, scales, 5.0),
            TargetSpec::Banana { dim, b, c } => {
                let mut low = vec![-4.0; *dim];
                let mut high = vec![4.0; *dim];
                low[0] = -3.0 * c;
                high[0] = 3.0 * c;
                low[1] = -3.0 - b.abs() * 8.0 * c * c;
                high[1] = 3.0 + b.abs() * c * c;
                (low, high)
            }
        }
    }

    /// Accepts a named target (`toy`, `gm5`, `gg5:<shape>`, `banana:<dim>`),
    /// inline JSON, or the path of a JSON file.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) if !text.starts_with('{') => (n, Some(a)),
            _ => (text, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::Config(format!("`{name}` needs a parameter, e.g. `{name}:2`")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad parameter in `{text}`: {e}")))
        };
        match name {
            "toy" => Ok(Self::toy()),
            "gm5" => Ok(Self::gm5()),
            "gg5" => Ok(Self::gg5(number(arg)?)),
            "banana" => {
                let d = number(arg)?;
                if d.fract() != 0.0 || d < 0.0 {
                    return Err(Error::Config(format!("banana dimension must be an integer, got {d}")));
                }
                Ok(Self::banana(d as usize))
            }
            _ if text.starts_with('{') => Ok(serde_json::from_str(text)?),
            _ if Path::new(text).is_file() => Ok(serde_json::from_str(&std::fs::read_to_string(text)?)?),
            _ => Err(Error::Config(format!(
                "unknown target `{text}`; expected toy, gm5, gg5:<shape>, banana:<dim>, JSON, or a JSON file"
            ))),
        }
    }
}
