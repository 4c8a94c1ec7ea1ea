//! Command-line arguments and the TOML run configuration. Every option can
//! be given in either place; a flag wins over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rrsens", version, about = "Sensitivity analysis for IPW treatment contrasts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sensitivity table and plot data for a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Replicate study on the three-arm simulation design.
    Simulate(SimulateArgs),
    /// Population-scale true intervals for the simulation design.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Logistic,
    Mlogit,
    Cratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    /// Read the 0.5 of the normal covariate as its standard deviation.
    Sd,
    /// Read it as the variance.
    Variance,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Input CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub treatment_col: Option<String>,
    #[arg(long)]
    pub outcome_col: Option<String>,
    /// Comma-separated covariates; `name=a|b|c` marks a categorical column
    /// with reference level `a`.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Comma-separated treatment levels in arm order.
    #[arg(long, value_delimiter = ',')]
    pub treatment_levels: Option<Vec<String>>,
    /// The treatment levels are ordered.
    #[arg(long)]
    pub ordinal: bool,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Stage order of the continuation-ratio model.
    #[arg(long, value_enum)]
    pub cratio_direction: Option<DirectionArg>,
    /// One slope vector shared by all continuation-ratio stages.
    #[arg(long)]
    pub shared_slopes: bool,
    /// Tiny ridge penalty on non-intercept coefficients, against separation.
    #[arg(long)]
    pub ridge: bool,
    /// Pairwise contrast `a:b` by arm label or 1-based index; repeatable.
    #[arg(long = "contrast")]
    #[serde(alias = "contrasts")]
    pub contrast: Option<Vec<String>>,
    /// Comma-separated log-scale sensitivity levels.
    #[arg(long, value_delimiter = ',', conflicts_with = "gamma0_ratio")]
    pub gamma0: Option<Vec<f64>>,
    /// Comma-separated ratio-scale levels `exp(gamma0) >= 1`.
    #[arg(long = "Gamma0", value_delimiter = ',')]
    #[serde(rename = "Gamma0")]
    pub gamma0_ratio: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bootstrap replicates; 0 skips the bootstrap.
    #[arg(long)]
    pub boot: Option<usize>,
    /// Also run the odds-ratio sensitivity model.
    #[arg(long)]
    pub or_baseline: bool,
    /// Keep the original GPS inside bootstrap resamples.
    #[arg(long)]
    pub no_refit: bool,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct DesignArgs {
    /// `I` (adequate overlap) or `II` (limited overlap).
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub k2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k3: Option<f64>,
    #[arg(long, value_enum)]
    pub x3_scale: Option<ScaleArg>,
    /// Comma-separated log-scale sensitivity levels.
    #[arg(long, value_delimiter = ',')]
    pub gamma0: Option<Vec<f64>>,
    /// Pairwise contrast `i:j`; repeatable. Defaults to all pairs.
    #[arg(long = "contrast")]
    #[serde(alias = "contrasts")]
    pub contrast: Option<Vec<String>>,
    /// Population size for the true intervals.
    #[arg(long)]
    pub oracle_n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    /// Sample size per dataset.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of simulated datasets.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Bootstrap replicates per dataset.
    #[arg(long)]
    pub boot: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// 1000 datasets with 1000 bootstrap replicates each.
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct OracleArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub analyze: AnalyzeArgs,
    pub simulate: SimulateArgs,
    pub oracle: OracleArgs,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    fn common(&self) -> CommonArgs {
        CommonArgs {
            config: None,
            out: self.out.clone(),
            seed: self.seed,
            threads: self.threads,
        }
    }
}

pub(crate) fn load_file(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

impl CommonArgs {
    pub fn merged(&self, file: &CommonArgs) -> CommonArgs {
        CommonArgs {
            config: self.config.clone(),
            out: self.out.clone().or_else(|| file.out.clone()),
            seed: self.seed.or(file.seed),
            threads: self.threads.or(file.threads),
        }
    }
}

impl AnalyzeArgs {
    /// Flags layered over the file.
    pub fn merged(self, file: &RunConfig) -> AnalyzeArgs {
        let f = file.analyze.clone();
        let cli_grid = self.gamma0.is_some() || self.gamma0_ratio.is_some();
        AnalyzeArgs {
            common: self.common.merged(&file.common()),
            data: self.data.or(f.data),
            treatment_col: self.treatment_col.or(f.treatment_col),
            outcome_col: self.outcome_col.or(f.outcome_col),
            covariates: self.covariates.or(f.covariates),
            treatment_levels: self.treatment_levels.or(f.treatment_levels),
            ordinal: self.ordinal || f.ordinal,
            model: self.model.or(f.model),
            cratio_direction: self.cratio_direction.or(f.cratio_direction),
            shared_slopes: self.shared_slopes || f.shared_slopes,
            ridge: self.ridge || f.ridge,
            contrast: self.contrast.or(f.contrast),
            // a grid on the command line replaces either grid in the file
            gamma0: if cli_grid { self.gamma0 } else { f.gamma0 },
            gamma0_ratio: if cli_grid { self.gamma0_ratio } else { f.gamma0_ratio },
            alpha: self.alpha.or(f.alpha),
            boot: self.boot.or(f.boot),
            or_baseline: self.or_baseline || f.or_baseline,
            no_refit: self.no_refit || f.no_refit,
        }
    }
}

impl DesignArgs {
    fn merged(self, f: DesignArgs) -> DesignArgs {
        DesignArgs {
            scenario: self.scenario.or(f.scenario),
            k2: self.k2.or(f.k2),
            k3: self.k3.or(f.k3),
            x3_scale: self.x3_scale.or(f.x3_scale),
            gamma0: self.gamma0.or(f.gamma0),
            contrast: self.contrast.or(f.contrast),
            oracle_n: self.oracle_n.or(f.oracle_n),
        }
    }
}

impl SimulateArgs {
    pub fn merged(self, file: &RunConfig) -> SimulateArgs {
        let f = file.simulate.clone();
        SimulateArgs {
            common: self.common.merged(&file.common()),
            design: self.design.merged(f.design),
            n: self.n.or(f.n),
            reps: self.reps.or(f.reps),
            boot: self.boot.or(f.boot),
            alpha: self.alpha.or(f.alpha),
            full_scale: self.full_scale || f.full_scale,
        }
    }
}

impl OracleArgs {
    pub fn merged(self, file: &RunConfig) -> OracleArgs {
        let f = file.oracle.clone();
        OracleArgs {
            common: self.common.merged(&file.common()),
            design: self.design.merged(f.design),
        }
    }
}
