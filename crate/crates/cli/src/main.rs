use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gramis::estimators::RmseTable;
use gramis::harness::{
    builtin, check_gradients, list_builtins, run_experiment, sweep, ExperimentConfig, RunOptions, SweepAxis,
    TargetSpec,
};

#[derive(Parser)]
#[command(name = "gramis", version, about = "Gradient-based adaptive multiple importance sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON)
    #[arg(long, conflicts_with = "builtin")]
    config: Option<PathBuf>,
    /// Run a builtin suite instead of a config file
    #[arg(long)]
    builtin: Option<String>,
    /// At most 20 runs, thresholds widened accordingly
    #[arg(long)]
    quick: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 2 when a threshold is violated
    #[arg(long)]
    verify: bool,
    /// Do not write per-run sample files
    #[arg(long)]
    no_samples: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment or a builtin suite
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write proposal traces and a log-density grid
        #[arg(long)]
        trace: bool,
    },
    /// Repeat an experiment along an axis
    Sweep {
        /// dimension or iterations
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare analytic derivatives with finite differences
    CheckGradients {
        /// toy, gm5, gg5:<shape>, banana:<dim>, inline JSON, or a JSON file
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List builtin suites
    ListBuiltins {
        /// Write each builtin config as JSON into this directory
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_configs(common: &Common, default_builtin: Option<&str>) -> CliResult<Vec<ExperimentConfig>> {
    let mut configs = match (&common.config, common.builtin.as_deref().or(default_builtin)) {
        (Some(path), _) => vec![ExperimentConfig::load(path)?],
        (None, Some(name)) => builtin(name)?.configs,
        (None, None) => return Err("pass --config <file.json> or --builtin <name>".into()),
    };
    for cfg in &mut configs {
        if let Some(seed) = common.seed {
            cfg.base_seed = seed;
        }
        if common.quick {
            *cfg = cfg.clone().quick();
        }
    }
    Ok(configs)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig, several: bool) -> Option<PathBuf> {
    let root = common.out.clone().or_else(|| cfg.output.clone())?;
    Some(if several { root.join(&cfg.name) } else { root })
}

fn options(common: &Common, trace: bool, out: Option<PathBuf>) -> RunOptions {
    RunOptions {
        threads: common.threads,
        trace,
        skip_samples: common.no_samples,
        out_dir: out,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4e}"))
}

fn print_table(label: &str, t: &RmseTable) {
    println!(
        "{label:<32} Z {:>11}  mean {:>11}  mse/coord {:>11}  m2 {:>11}  chi2 {:>11}  runs {}/{}",
        cell(t.z),
        cell(t.mean),
        cell(t.mean_mse_per_coordinate),
        cell(t.second_moment),
        cell(t.chi2),
        t.runs_used,
        t.runs_used + t.runs_failed
    );
}

fn report_failures(label: &str, failures: &[String]) -> bool {
    for f in failures {
        println!("  FAIL {label}: {f}");
    }
    failures.is_empty()
}

fn run(common: &Common, trace: bool) -> CliResult<bool> {
    let configs = load_configs(common, None)?;
    let several = configs.len() > 1;
    let mut ok = true;
    for cfg in &configs {
        let summary = run_experiment(cfg, &options(common, trace, out_dir(common, cfg, several)))?;
        print_table(&cfg.name, &summary.table);
        ok &= report_failures(&cfg.name, &summary.threshold_failures);
    }
    Ok(ok)
}

fn run_sweep(axis: SweepAxis, values: &[usize], common: &Common) -> CliResult<bool> {
    let default = match axis {
        SweepAxis::Dimension => "banana-dimension",
        SweepAxis::Iterations => "banana-iterations",
    };
    let configs = load_configs(common, Some(default))?;
    let several = configs.len() > 1;
    let mut ok = true;
    for cfg in &configs {
        let table = sweep(cfg, axis, values, &options(common, false, out_dir(common, cfg, several)))?;
        for row in &table.rows {
            let label = format!("{} {}={}", cfg.name, axis.name(), row.value);
            print_table(&label, &row.table);
            ok &= report_failures(&label, &row.threshold_failures);
        }
    }
    Ok(ok)
}

fn gradients(target: &str, points: usize, seed: u64) -> CliResult<bool> {
    let spec = TargetSpec::parse(target)?;
    let r = check_gradients(&spec, points, seed)?;
    println!(
        "{} d={} points={} excluded={} gradient {:.3e} hessian {:.3e} {}",
        r.family,
        r.dim,
        r.points,
        r.excluded,
        r.max_gradient_error,
        r.max_hessian_error,
        if r.passed { "PASS" } else { "FAIL" }
    );
    Ok(r.passed)
}

fn builtins(write: Option<&Path>) -> CliResult<()> {
    if let Some(dir) = write {
        std::fs::create_dir_all(dir)?;
    }
    for b in list_builtins() {
        let sweep = b
            .sweep
            .as_ref()
            .map(|s| format!(", sweep {} over {:?}", s.axis.name(), s.values))
            .unwrap_or_default();
        let n = b.configs.len();
        let plural = if n == 1 { "" } else { "s" };
        println!("{:<18} {} ({n} config{plural}{sweep})", b.name, b.description);
        if let Some(dir) = write {
            for cfg in &b.configs {
                cfg.save(dir.join(format!("{}.json", cfg.name)))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, verify) = match &cli.command {
        Command::Run { common, trace } => (run(common, *trace), common.verify),
        Command::Sweep { axis, values, common } => (run_sweep(*axis, values, common), common.verify),
        Command::CheckGradients { target, points, seed } => (gradients(target, *points, *seed), true),
        Command::ListBuiltins { write } => (builtins(write.as_deref()).map(|_| true), false),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if verify => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
