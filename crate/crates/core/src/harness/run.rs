use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, GridSpec};
use crate::adaptation::{Gramis, IterationRecord};
use crate::error::{Error, Result};
use crate::estimators::{chi2_estimate, rmse_aggregate, EstimateReport, Metric, RmseTable, WeightedSampleSet};
use crate::numerics::RngStream;
use crate::targets::Target;

/// Execution settings that do not change results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
    /// Write `trace_<i>.csv` and `grid.csv`.
    pub trace: bool,
    /// Skip the per-run `run_<i>.csv` sample dumps.
    pub skip_samples: bool,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub wall_clock_secs: f64,
    pub report: EstimateReport,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub table: RmseTable,
    pub runs: Vec<RunSummary>,
    pub threshold_failures: Vec<String>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.threshold_failures.is_empty()
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn numbered(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{prefix}{i}"))
}

fn write_samples(path: &Path, dim: usize, records: &[IterationRecord<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = ["t", "n", "k"]
        .into_iter()
        .map(String::from)
        .chain(numbered("x", dim))
        .chain(std::iter::once("log_w".into()))
        .collect();
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for r in records {
        for ((x, &(n, k)), &lw) in r.batch.samples.iter().zip(&r.batch.tags).zip(&r.log_weights) {
            row.clear();
            row.extend([r.t.to_string(), n.to_string(), k.to_string()]);
            row.extend(x.iter().map(|&v| fmt(v)));
            row.push(fmt(lw));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, dim: usize, records: &[IterationRecord<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = vec!["t".into(), "n".into()];
    header.extend(numbered("mu", dim));
    for i in 1..=dim {
        for j in i..=dim {
            header.push(format!("s{i}_{j}"));
        }
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for r in records {
        for (n, (mean, cov)) in r.means.iter().zip(&r.covariances).enumerate() {
            row.clear();
            row.extend([r.t.to_string(), n.to_string()]);
            row.extend(mean.iter().map(|&v| fmt(v)));
            row.extend(cov.upper_triangle().into_iter().map(fmt));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `x1,x2,log_density` over the grid, other coordinates held at zero.
pub fn write_grid(path: &Path, target: &dyn Target<f64>, grid: &GridSpec) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x1", "x2", "log_density"])?;
    let dx = (grid.high[0] - grid.low[0]) / (grid.points - 1) as f64;
    let dy = (grid.high[1] - grid.low[1]) / (grid.points - 1) as f64;
    let mut x = vec![0.0; target.dim()];
    for a in 0..grid.points {
        for b in 0..grid.points {
            x[0] = grid.low[0] + dx * a as f64;
            x[1] = grid.low[1] + dy * b as f64;
            w.write_record([fmt(x[0]), fmt(x[1]), fmt(target.log_density(&x)?)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_one(cfg: &ExperimentConfig, target: &dyn Target<f64>, run: usize, opts: &RunOptions) -> Result<RunSummary> {
    let seed = cfg.base_seed.wrapping_add(run as u64);
    let dim = target.dim();
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.gramis.iterations);
    let outcome = (|| -> Result<EstimateReport> {
        let mut sampler = Gramis::new(target, cfg.gramis.clone(), seed)?;
        while !sampler.is_done() {
            records.push(sampler.step()?);
        }
        let set = WeightedSampleSet::from_records(dim, &records)?;
        let mut report = EstimateReport::from_window(&set, cfg.window, target.truth().normalizing_constant)?;
        if cfg.metrics.contains(&Metric::Chi2) {
            let mut rng = RngStream::for_diagnostics(seed);
            report.chi2 = Some(chi2_estimate(target, sampler.bank(), cfg.chi2_samples, &mut rng)?);
        }
        Ok(report)
    })();
    let report = match outcome {
        Ok(r) => r,
        Err(e @ (Error::Io(_) | Error::Csv(_) | Error::Json(_))) => return Err(e),
        Err(e) => EstimateReport::failed(dim, e.to_string()),
    };
    let wall_clock_secs = start.elapsed().as_secs_f64();
    if let Some(dir) = &opts.out_dir {
        if !opts.skip_samples {
            write_samples(&dir.join(format!("run_{run}.csv")), dim, &records)?;
        }
        if opts.trace {
            write_trace(&dir.join(format!("trace_{run}.csv")), dim, &records)?;
        }
    }
    Ok(RunSummary {
        run,
        seed,
        wall_clock_secs,
        report,
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `R` independent replications and aggregates their errors.
///
/// With an output directory this writes `summary.json` and the per-run CSV
/// files. Failed runs are kept in the summary with their reason and left
/// out of the aggregate.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Summary> {
    cfg.validate()?;
    let target = cfg.target.build()?;
    let target: &dyn Target<f64> = target.as_ref();
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
    }
    let runs = pool(opts.threads)?.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| run_one(cfg, target, r, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    let reports: Vec<EstimateReport> = runs.iter().map(|r| r.report.clone()).collect();
    let table = rmse_aggregate(&reports, &target.truth(), &cfg.metrics, cfg.moment_estimator)?;
    let threshold_failures = cfg.thresholds.as_ref().map(|t| t.check(&table)).unwrap_or_default();
    let summary = Summary {
        config: cfg.clone(),
        table,
        runs,
        threshold_failures,
    };
    if let Some(dir) = &opts.out_dir {
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        if opts.trace && target.dim() >= 2 {
            let grid = cfg.grid.clone().unwrap_or_else(|| GridSpec::for_target(&cfg.target));
            write_grid(&dir.join("grid.csv"), target, &grid)?;
        }
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dimension,
    Iterations,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Dimension => "dimension",
            SweepAxis::Iterations => "iterations",
        }
    }

    /// The configuration for one axis value.
    pub fn apply(self, cfg: &ExperimentConfig, value: usize) -> Result<ExperimentConfig> {
        let mut out = cfg.clone();
        match self {
            SweepAxis::Dimension => out.target = cfg.target.with_dim(value)?,
            SweepAxis::Iterations => out.gramis.iterations = value,
        }
        out.name = format!("{}-{}{value}", cfg.name, self.name());
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dimension" => Ok(SweepAxis::Dimension),
            "iterations" => Ok(SweepAxis::Iterations),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub table: RmseTable,
    pub threshold_failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub name: String,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.threshold_failures.is_empty())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// One experiment per axis value. Each value writes into `<out>/<axis>_<value>`,
/// and the table goes to `sweep.csv` and `sweep.json`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[usize], opts: &RunOptions) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let point = axis.apply(cfg, value)?;
        let mut point_opts = opts.clone();
        point_opts.out_dir = opts.out_dir.as_ref().map(|d| d.join(format!("{}_{value}", axis.name())));
        let summary = run_experiment(&point, &point_opts)?;
        rows.push(SweepRow {
            value,
            table: summary.table,
            threshold_failures: summary.threshold_failures,
        });
    }
    let table = SweepTable {
        name: cfg.name.clone(),
        axis,
        rows,
    };
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record([
            axis.name(),
            "z_rmse",
            "mean_rmse",
            "mean_mse_per_coordinate",
            "second_moment_rmse",
            "chi2",
            "runs_used",
            "runs_failed",
        ])?;
        for r in &table.rows {
            let t = &r.table;
            w.write_record([
                r.value.to_string(),
                opt(t.z),
                opt(t.mean),
                opt(t.mean_mse_per_coordinate),
                opt(t.second_moment),
                opt(t.chi2),
                t.runs_used.to_string(),
                t.runs_failed.to_string(),
            ])?;
        }
        w.flush()?;
        fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&table)? + "\n")?;
    }
    Ok(table)
}
