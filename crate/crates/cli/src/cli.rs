use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use priorconflict::Tail;

use crate::config::{Counts, Real, Reals};

#[derive(Debug, Parser)]
#[command(name = "priorconflict", version, about = "Score-based prior-data conflict checks", propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reference (prior-predictive) draws per check.
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Replicates per grid point in power studies.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads; 0 uses the global pool. Defaults to $PRIORCONFLICT_WORKERS.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Significance level for power studies.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Tail for checks that let the caller choose: upper, lower, two-sided.
    #[arg(long, global = true)]
    pub tail: Option<Tail>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s.trim(), true).map_err(|_| format!("'{s}' is not one of csv, json"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conflict checks for conjugate models.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Checks of the Laplace prior in many-means and regression problems.
    #[command(subcommand)]
    Lasso(LassoCmd),
    /// Checks for trine measurement counts.
    #[command(subcommand)]
    Quantum(QuantumCmd),
    /// Regenerate a reference figure or table value.
    Reproduce(ReproduceArgs),
}

impl Command {
    /// Config section read by this command.
    pub fn section(&self) -> String {
        match self {
            Command::Check(c) => format!("check.{}", c.name()),
            Command::Lasso(c) => format!("lasso.{}", c.name()),
            Command::Quantum(c) => format!("quantum.{}", c.name()),
            Command::Reproduce(r) => format!("reproduce.{}", r.target),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Normal mean with known variance; expansion in the prior variance.
    Normal(NormalArgs),
    /// Binomial count with a beta prior mixed toward a reference prior.
    Binomial(BinomialArgs),
    /// Normal sample with a normal-inverse-gamma prior.
    Nig(NigArgs),
}

impl CheckCmd {
    fn name(&self) -> &'static str {
        match self {
            CheckCmd::Normal(_) => "normal",
            CheckCmd::Binomial(_) => "binomial",
            CheckCmd::Nig(_) => "nig",
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct NormalArgs {
    #[arg(long)]
    pub mu0: Option<Real>,
    /// Prior variance of the mean.
    #[arg(long)]
    pub tau0sq: Option<Real>,
    /// Sampling variance.
    #[arg(long)]
    pub sigmasq: Option<Real>,
    /// One or more observations; several are reduced to their mean.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<Reals>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BinomialArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub y: Option<u64>,
    /// Beta prior shape a.
    #[arg(long)]
    pub a: Option<Real>,
    /// Beta prior shape b.
    #[arg(long)]
    pub b: Option<Real>,
    /// Mixture target: jeffreys or uniform.
    #[arg(long)]
    pub target: Option<Target>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Jeffreys,
    Uniform,
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Target as ValueEnum>::from_str(s.trim(), true).map_err(|_| format!("'{s}' is not one of jeffreys, uniform"))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct NigArgs {
    #[arg(long)]
    pub mu0: Option<Real>,
    #[arg(long)]
    pub lambda0: Option<Real>,
    /// Inverse-gamma shape.
    #[arg(long)]
    pub a: Option<Real>,
    /// Inverse-gamma scale.
    #[arg(long)]
    pub b: Option<Real>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<Reals>,
    /// Prior expansion: s1, lambda, or mean-shift.
    #[arg(long)]
    pub expansion: Option<NigExpansion>,
    /// Posterior draws per dataset for the lambda expansion.
    #[arg(long)]
    pub posterior_draws: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NigExpansion {
    S1,
    Lambda,
    MeanShift,
}

impl FromStr for NigExpansion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <NigExpansion as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| format!("'{s}' is not one of s1, lambda, mean-shift"))
    }
}

#[derive(Debug, Subcommand)]
pub enum LassoCmd {
    /// 2.5% and 97.5% points of the kurtosis and score statistics.
    MeansCrit(MeansCritArgs),
    /// Power over shapes q in the many-means problem.
    MeansPower(MeansPowerArgs),
    /// Power over shapes q in linear regression.
    RegPower(RegPowerArgs),
}

impl LassoCmd {
    fn name(&self) -> &'static str {
        match self {
            LassoCmd::MeansCrit(_) => "means_crit",
            LassoCmd::MeansPower(_) => "means_power",
            LassoCmd::RegPower(_) => "reg_power",
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MeansCritArgs {
    /// Number of means.
    #[arg(long)]
    pub n: Option<usize>,
    /// Observations per mean.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tau: Option<Real>,
    /// kurtosis, score, or both.
    #[arg(long)]
    pub statistic: Option<StatisticChoice>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatisticChoice {
    Kurtosis,
    Score,
    Both,
}

impl FromStr for StatisticChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <StatisticChoice as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| format!("'{s}' is not one of kurtosis, score, both"))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MeansPowerArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tau: Option<Real>,
    /// Shapes q at which data are generated.
    #[arg(long)]
    pub q_grid: Option<Reals>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RegPowerArgs {
    /// Observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Coefficients.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub tau: Option<Real>,
    #[arg(long)]
    pub q_grid: Option<Reals>,
    /// Standardize design columns.
    #[arg(long)]
    pub standardize: Option<crate::config::Switch>,
}

#[derive(Debug, Subcommand)]
pub enum QuantumCmd {
    /// Check from the Jeffreys-mixture expansion.
    G1(FamilyArgs),
    /// Check from the location-shift expansion.
    G2(FamilyArgs),
    /// Check of the trine distortion angle.
    Physical(PhysicalArgs),
    /// Power curves for the g1, g2, or physical checks.
    Power(PowerArgs),
}

impl QuantumCmd {
    fn name(&self) -> &'static str {
        match self {
            QuantumCmd::G1(_) => "g1",
            QuantumCmd::G2(_) => "g2",
            QuantumCmd::Physical(_) => "physical",
            QuantumCmd::Power(_) => "power",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct GeometryArgs {
    /// cos²γ0 of the measurement geometry (1/3 is the ideal trine).
    #[arg(long)]
    pub cos_sq: Option<Real>,
    /// γ0 in radians; alternative to --cos-sq.
    #[arg(long)]
    pub gamma: Option<Real>,
    /// Radial Gauss-Legendre nodes of the disk grid.
    #[arg(long)]
    pub radial: Option<usize>,
    /// Angular Gauss-Legendre nodes of the disk grid.
    #[arg(long)]
    pub angular: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FamilyArgs {
    /// Three outcome counts.
    #[arg(long)]
    pub y: Option<Counts>,
    /// Baseline Dirichlet concentration.
    #[arg(long)]
    pub alpha0: Option<Real>,
    /// Baseline Dirichlet proportions (three values).
    #[arg(long)]
    pub q: Option<Reals>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PhysicalArgs {
    #[arg(long)]
    pub y: Option<Counts>,
    /// Symmetric Dirichlet parameter of the prior.
    #[arg(long)]
    pub prior_alpha: Option<Real>,
    /// Finite-difference step in γ.
    #[arg(long)]
    pub h: Option<Real>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PowerArgs {
    /// g1, g2, or physical.
    #[arg(long)]
    pub family: Option<PowerFamily>,
    /// Multinomial trials per simulated dataset.
    #[arg(long)]
    pub n_trials: Option<u64>,
    /// Values of γ at which data are generated.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<Reals>,
    #[arg(long)]
    pub alpha0: Option<Real>,
    #[arg(long)]
    pub q: Option<Reals>,
    #[arg(long)]
    pub prior_alpha: Option<Real>,
    #[arg(long)]
    pub h: Option<Real>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PowerFamily {
    G1,
    G2,
    Physical,
}

impl FromStr for PowerFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <PowerFamily as ValueEnum>::from_str(s.trim(), true).map_err(|_| format!("'{s}' is not one of g1, g2, physical"))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: ReproduceTarget,
    /// Print what the target computes and its expected output, then exit.
    #[arg(long)]
    pub describe: bool,
    /// Multinomial trials per dataset (fig4, power-flat).
    #[arg(long)]
    pub n_trials: Option<u64>,
    /// Shapes q (fig2, fig3).
    #[arg(long)]
    pub q_grid: Option<Reals>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReproduceTarget {
    Example1,
    Fig1,
    Crit,
    Fig2,
    Fig3,
    Fig4,
    PowerFlat,
    QuantumExperiment,
}

impl fmt::Display for ReproduceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(&v.get_name().replace('-', "_"))
    }
}
