//! The `rrsens` command line: `analyze`, `simulate` and `oracle`.

mod analyze;
mod args;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

pub use analyze::{
    parse_contrast, plotdata_csv, results_csv, run_analysis, sensitivity_grid, AnalysisReport, AnalysisSettings,
    GridPoint, ResultRow, DEFAULT_RATIO_GRID, RESULTS_VERSION,
};
pub use args::{
    AnalyzeArgs, Cli, Command, CommonArgs, DesignArgs, DirectionArg, ModelArg, OracleArgs, RunConfig, ScaleArg,
    SimulateArgs,
};

use crate::boot::BootstrapConfig;
use crate::data::{load_csv, ContrastSpec, CovariateColumn, Schema};
use crate::error::{Error, Result};
use crate::gps::{Direction, FitOptions, GpsFamily};
use crate::sens::ModelFamily;
use crate::sim::{self, NormalScale, ScenarioConfig};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BOOT: usize = 1000;

/// Entry point of the binary.
pub fn run() -> ExitCode {
    match run_from(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Parses `argv` (program name first) and runs the subcommand. Help and
/// usage errors from the parser exit the process as usual.
pub fn run_from<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::parse_from(argv);
    execute(cli.command)
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze(a) => {
            let file = args::load_file(&a.common)?;
            let a = a.merged(&file);
            with_threads(a.common.threads, || analyze_command(&a))
        }
        Command::Simulate(a) => {
            let file = args::load_file(&a.common)?;
            let a = a.merged(&file);
            with_threads(a.common.threads, || simulate_command(&a))
        }
        Command::Oracle(a) => {
            let file = args::load_file(&a.common)?;
            let a = a.merged(&file);
            with_threads(a.common.threads, || oracle_command(&a))
        }
    }
}

fn with_threads<F: FnOnce() -> Result<()> + Send>(threads: Option<usize>, f: F) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Config(format!("missing required option --{flag}")))
}

fn analyze_command(a: &AnalyzeArgs) -> Result<()> {
    let data = required(&a.data, "data")?;
    let schema = Schema {
        treatment: required(&a.treatment_col, "treatment-col")?,
        outcome: required(&a.outcome_col, "outcome-col")?,
        covariates: a
            .covariates
            .clone()
            .unwrap_or_default()
            .iter()
            .map(|c| CovariateColumn::parse(c))
            .collect::<Result<_>>()?,
        treatment_levels: a.treatment_levels.clone(),
        intercept_present: false,
    };
    let ds = load_csv(&data, &schema)?;
    for f in ds.validate() {
        eprintln!("warning: {}", f.message);
    }

    let j = ds.num_arms();
    let model = match a.model {
        Some(m) => m,
        None if j == 2 => ModelArg::Logistic,
        None if a.ordinal => ModelArg::Cratio,
        None => ModelArg::Mlogit,
    };
    let gps_family = match model {
        ModelArg::Logistic => GpsFamily::BinaryLogistic,
        ModelArg::Mlogit => GpsFamily::MultinomialLogit,
        ModelArg::Cratio => {
            if !a.ordinal {
                return Err(Error::Config(
                    "the continuation-ratio model needs ordered treatment levels (--ordinal)".into(),
                ));
            }
            GpsFamily::ContinuationRatio {
                direction: match a.cratio_direction {
                    Some(DirectionArg::Backward) => Direction::Backward,
                    _ => Direction::Forward,
                },
                shared_slopes: a.shared_slopes,
            }
        }
    };

    let contrasts = match &a.contrast {
        Some(list) if !list.is_empty() => list.iter().map(|c| parse_contrast(c, &ds)).collect::<Result<_>>()?,
        _ => ContrastSpec::all_pairs(j),
    };
    let grid = sensitivity_grid(a.gamma0.as_deref(), a.gamma0_ratio.as_deref())?;
    let mut models = vec![ModelFamily::RiskRatio];
    if a.or_baseline {
        models.push(ModelFamily::OddsRatio);
    }
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let alpha = a.alpha.unwrap_or(DEFAULT_ALPHA);
    let bootstrap = match a.boot.unwrap_or(DEFAULT_BOOT) {
        0 => None,
        b => {
            let cfg = BootstrapConfig::new(b, alpha, seed)?;
            Some(if a.no_refit { cfg.without_refit() } else { cfg })
        }
    };
    let settings = AnalysisSettings {
        gps_family,
        fit: if a.ridge {
            FitOptions::separation_guard()
        } else {
            FitOptions::default()
        },
        contrasts,
        grid,
        models,
        bootstrap,
    };

    let (report, fitted) = run_analysis(&ds, &settings)?;
    for w in &fitted.warnings {
        eprintln!("warning: {w}");
    }
    eprint!("{}", report.gps_range);

    let dir = out_dir(&a.common)?;
    write(&dir, "results.csv", &results_csv(&report))?;
    write(&dir, "results.json", &json(&report)?)?;
    write(&dir, "plotdata.csv", &plotdata_csv(&report))?;
    write(&dir, "gps_model.json", &(fitted.to_json()? + "\n"))?;
    eprintln!("wrote {} rows to {}", report.rows.len(), dir.display());
    Ok(())
}

fn scenario_config(d: &DesignArgs, n: usize, seed: u64) -> Result<ScenarioConfig> {
    let mut cfg = match d.scenario.as_deref().map(str::trim) {
        None | Some("I") | Some("i") | Some("1") | Some("one") => ScenarioConfig::scenario_one(n, seed),
        Some("II") | Some("ii") | Some("2") | Some("two") => ScenarioConfig::scenario_two(n, seed),
        Some(s) => return Err(Error::Config(format!("unknown scenario `{s}`; use I or II"))),
    };
    if let Some(k2) = d.k2 {
        cfg.k2 = k2;
    }
    if let Some(k3) = d.k3 {
        cfg.k3 = k3;
    }
    if let Some(s) = d.x3_scale {
        cfg.x3_scale = match s {
            ScaleArg::Sd => NormalScale::StdDev,
            ScaleArg::Variance => NormalScale::Variance,
        };
    }
    if let Some(g) = &d.gamma0 {
        cfg.gamma0_grid = g.clone();
    }
    if let Some(n) = d.oracle_n {
        cfg.oracle_n = n;
    }
    Ok(cfg)
}

fn design_contrasts(d: &DesignArgs) -> Result<Vec<ContrastSpec>> {
    match &d.contrast {
        Some(list) if !list.is_empty() => list
            .iter()
            .map(|c| ContrastSpec::parse_pair(c, sim::NUM_ARMS))
            .collect(),
        _ => Ok(ContrastSpec::all_pairs(sim::NUM_ARMS)),
    }
}

fn simulate_command(a: &SimulateArgs) -> Result<()> {
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let mut cfg = scenario_config(&a.design, a.n.unwrap_or(750), seed)?;
    if a.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(b) = a.boot {
        cfg.bootstrap.reps = b;
    }
    if let Some(alpha) = a.alpha {
        cfg.bootstrap.alpha = alpha;
    }
    let contrasts = design_contrasts(&a.design)?;
    let report = sim::run_study(&cfg, &contrasts)?;
    if report.overlap_warning {
        eprintln!(
            "warning: fitted GPSs as small as {:.2e}; interpret the sensitivity analysis with caution under limited overlap",
            report.min_fitted_gps
        );
    }
    if report.failed_replicates > 0 {
        eprintln!(
            "warning: {} of {} replicates failed",
            report.failed_replicates, cfg.reps
        );
    }
    let dir = out_dir(&a.common)?;
    write(&dir, "study.csv", &report.to_csv())?;
    write(&dir, "study.json", &(report.to_json()? + "\n"))?;
    eprintln!("wrote {} rows to {}", report.rows.len(), dir.display());
    Ok(())
}

#[derive(Serialize)]
struct OracleRow<'a> {
    estimand: &'a str,
    #[serde(flatten)]
    interval: sim::OracleInterval,
}

#[derive(Serialize)]
struct OracleReport<'a> {
    version: u32,
    scenario: &'a str,
    k2: f64,
    k3: f64,
    x3_scale: NormalScale,
    oracle_n: usize,
    seed: u64,
    se_definition: &'static str,
    rows: Vec<OracleRow<'a>>,
}

fn oracle_command(a: &OracleArgs) -> Result<()> {
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let cfg = scenario_config(&a.design, 1, seed)?;
    if cfg.oracle_n < sim::MIN_ORACLE_N {
        return Err(Error::Config(format!(
            "--oracle-n must be at least {}",
            sim::MIN_ORACLE_N
        )));
    }
    if cfg.gamma0_grid.is_empty() || cfg.gamma0_grid.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::Config("gamma0 values must be >= 0".into()));
    }
    let contrasts = design_contrasts(&a.design)?;
    let grid = sim::oracle_grid(&cfg.dgp(), &contrasts, &cfg.gamma0_grid, cfg.oracle_n, seed)?;

    let mut csv = String::from("scenario,estimand,gamma0,lower,upper,se_lower,se_upper\n");
    let mut rows = Vec::new();
    for (c, contrast) in contrasts.iter().enumerate() {
        for iv in &grid[c] {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                cfg.label,
                contrast.label(),
                iv.gamma0,
                iv.lower,
                iv.upper,
                iv.se_lower,
                iv.se_upper
            );
            rows.push(OracleRow {
                estimand: contrast.label(),
                interval: *iv,
            });
        }
    }
    let report = OracleReport {
        version: sim::STUDY_VERSION,
        scenario: &cfg.label,
        k2: cfg.k2,
        k3: cfg.k3,
        x3_scale: cfg.x3_scale,
        oracle_n: cfg.oracle_n,
        seed,
        se_definition: "linearized variance of each weighted mean at its optimal weights",
        rows,
    };
    let dir = out_dir(&a.common)?;
    write(&dir, "oracle.csv", &csv)?;
    write(&dir, "oracle.json", &json(&report)?)?;
    eprintln!("wrote {} rows to {}", report.rows.len(), dir.display());
    Ok(())
}
