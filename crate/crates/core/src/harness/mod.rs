//! Config-driven experiment runner.

mod builtins;
mod config;
mod gradients;
mod run;
mod target_spec;

pub use builtins::{
    banana_dimension, banana_iterations, builtin, gg5, gm5_ablation, list_builtins, toy_2comp, Builtin, SweepPlan,
    BANANA_DIMENSIONS, BANANA_ITERATIONS, BUILTIN_NAMES,
};
pub use config::{ExperimentConfig, GridSpec, Thresholds, QUICK_RUNS};
pub use gradients::{check_gradients, GradientReport, EXCLUSION_RADIUS};
pub use run::{run_experiment, sweep, write_grid, RunOptions, RunSummary, Summary, SweepAxis, SweepRow, SweepTable};
pub use target_spec::{TargetSpec, FIVE_MEANS};
