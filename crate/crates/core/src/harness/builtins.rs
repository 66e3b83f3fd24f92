use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, SweepAxis, TargetSpec, Thresholds};
use crate::adaptation::{Bound, GramisConfig, InitBox, RepulsionConfig, Schedule};
use crate::error::{Error, Result};

/// A named set of experiments, optionally swept along an axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Builtin {
    pub name: String,
    pub description: String,
    pub configs: Vec<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepPlan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

pub const BUILTIN_NAMES: [&str; 5] = ["toy-2comp", "gm5-ablation", "gg5", "banana-dimension", "banana-iterations"];

pub const BANANA_DIMENSIONS: [usize; 8] = [2, 5, 10, 15, 20, 30, 40, 50];
pub const BANANA_ITERATIONS: [usize; 6] = [10, 20, 50, 100, 150, 200];

fn base(box_: InitBox, sigma: f64) -> GramisConfig {
    let mut g = GramisConfig::new(50, 20, 20, box_);
    g.init_sigma = sigma;
    g
}

fn exponential(g1: f64) -> RepulsionConfig {
    RepulsionConfig::new(Schedule::Exponential { g1, beta: None })
}

/// Four variants on the two-mode target: fixed step without repulsion,
/// Newton without repulsion, constant and decaying repulsion.
pub fn toy_2comp() -> Vec<ExperimentConfig> {
    let variants = [
        ("noprecond-norep", false, RepulsionConfig::off()),
        ("norep", true, RepulsionConfig::off()),
        ("constant", true, RepulsionConfig::new(Schedule::Constant { g: 0.5 })),
        ("exponential", true, exponential(0.5)),
    ];
    variants
        .into_iter()
        .map(|(tag, precondition, repulsion)| {
            let mut g = base(InitBox::cube(1.0, 6.0), 1.0);
            g.precondition = precondition;
            g.repulsion = repulsion;
            ExperimentConfig::new(format!("toy-2comp-{tag}"), TargetSpec::toy(), g, 20)
        })
        .collect()
}

/// Preconditioning × repulsion ablation for σ ∈ {1, 3, 5}.
pub fn gm5_ablation() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for (precondition, p_tag) in [(false, "noprecond"), (true, "precond")] {
        for (repulsion, r_tag) in [(false, "norep"), (true, "rep")] {
            for sigma in [1.0, 3.0, 5.0] {
                let mut g = base(InitBox::cube(-15.0, 15.0), sigma);
                g.precondition = precondition;
                g.fixed_step = 0.1;
                g.repulsion = if repulsion { exponential(0.05) } else { RepulsionConfig::off() };
                let mut cfg = ExperimentConfig::new(format!("gm5-{p_tag}-{r_tag}-s{sigma}"), TargetSpec::gm5(), g, 100);
                cfg.metrics.retain(|m| *m != crate::estimators::Metric::Chi2);
                if precondition && repulsion && sigma == 1.0 {
                    cfg.thresholds = Some(Thresholds {
                        z_rmse: Some(0.05),
                        mean_rmse: Some(2.0),
                        ..Default::default()
                    });
                }
                out.push(cfg);
            }
        }
    }
    out
}

/// Shapes 0.5, 1 and 1.5 from a start concentrated near one mode, with
/// repulsion decaying from `G_1 = 1`.
pub fn gg5() -> Vec<ExperimentConfig> {
    [0.5, 1.0, 1.5]
        .into_iter()
        .map(|eta| {
            let init = InitBox {
                low: Bound::PerCoordinate(vec![13.0, -8.0]),
                high: Bound::PerCoordinate(vec![15.0, -6.0]),
            };
            let mut g = base(init, 1.0);
            g.repulsion = exponential(1.0);
            let mut cfg = ExperimentConfig::new(format!("gg5-eta{eta}"), TargetSpec::gg5(eta), g, 100);
            if eta == 1.0 {
                cfg.thresholds = Some(Thresholds {
                    z_rmse: Some(1e-2),
                    chi2: Some(0.5),
                    ..Default::default()
                });
            }
            cfg
        })
        .collect()
}

fn banana_base(name: &str, dim: usize, repulsion: RepulsionConfig) -> ExperimentConfig {
    let mut g = base(InitBox::cube(-4.0, 4.0), 1.0);
    g.repulsion = repulsion;
    let mut cfg = ExperimentConfig::new(name, TargetSpec::banana(dim), g, 50);
    cfg.metrics = vec![crate::estimators::Metric::Mean];
    cfg
}

pub fn banana_dimension() -> ExperimentConfig {
    let mut cfg = banana_base("banana-dimension", 2, RepulsionConfig::off());
    cfg.thresholds = Some(Thresholds {
        mean_mse_per_coordinate: Some(0.01),
        ..Default::default()
    });
    cfg
}

/// Without and with a weak constant repulsion.
pub fn banana_iterations() -> Vec<ExperimentConfig> {
    vec![
        banana_base("banana-iterations-g0", 2, RepulsionConfig::off()),
        banana_base("banana-iterations-g0.01", 2, RepulsionConfig::new(Schedule::Constant { g: 1e-2 })),
    ]
}

pub fn builtin(name: &str) -> Result<Builtin> {
    let (description, configs, sweep) = match name {
        "toy-2comp" => ("two-mode Gaussian mixture, four adaptation variants", toy_2comp(), None),
        "gm5-ablation" => ("five-mode Gaussian mixture, preconditioning × repulsion × σ", gm5_ablation(), None),
        "gg5" => ("five-mode generalized Gaussian mixture, shapes 0.5/1/1.5", gg5(), None),
        "banana-dimension" => (
            "banana target swept over dimension, no repulsion",
            vec![banana_dimension()],
            Some(SweepPlan {
                axis: SweepAxis::Dimension,
                values: BANANA_DIMENSIONS.to_vec(),
            }),
        ),
        "banana-iterations" => (
            "banana target swept over T with G ∈ {0, 0.01}",
            banana_iterations(),
            Some(SweepPlan {
                axis: SweepAxis::Iterations,
                values: BANANA_ITERATIONS.to_vec(),
            }),
        ),
        _ => {
            return Err(Error::Config(format!(
                "unknown builtin `{name}`; available: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(Builtin {
        name: name.into(),
        description: description.into(),
        configs,
        sweep,
    })
}

pub fn list_builtins() -> Vec<Builtin> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).expect("listed builtin")).collect()
}
