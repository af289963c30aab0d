use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kinship_core::freqs::PoolWeights;
use kinship_core::lrstats::Statistic;
use kinship_core::pairprob::ThetaIbd;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "kinship", version, about = "Kinship likelihood ratios and Monte Carlo power in structured populations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every statistic for two profile CSVs.
    Lr(LrArgs),
    /// Null thresholds and power at one or more false positive rates.
    Power(RunArgs),
    /// Power against a grid of false positive rates.
    PowerCurve(RunArgs),
    /// Per-subpopulation power and pairwise difference intervals.
    SubpopBias(RunArgs),
    /// Write a synthetic frequency table and its metadata.
    SynthFreqs(SynthArgs),
    /// Check a frequency table (and optionally profiles) without simulating.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Metadata TOML (panel, subpopulations, proportions).
    #[arg(long)]
    pub meta: PathBuf,
    /// Frequency CSV; defaults to the `freqs` entry of the metadata.
    #[arg(long)]
    pub freqs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    ParentChild,
    FullSib,
    HalfSibPaper,
    HalfSibStandard,
    Custom,
}

impl TestKind {
    pub fn default_alpha(self) -> Option<f64> {
        match self {
            TestKind::ParentChild => Some(2e-5),
            TestKind::FullSib => Some(2e-4),
            TestKind::HalfSibPaper | TestKind::HalfSibStandard => Some(2e-3),
            TestKind::Custom => None,
        }
    }

    fn alternative(self) -> Option<ThetaIbd> {
        match self {
            TestKind::ParentChild => Some(ThetaIbd::PARENT_CHILD),
            TestKind::FullSib => Some(ThetaIbd::FULL_SIB),
            TestKind::HalfSibPaper => Some(ThetaIbd::HALF_SIB_PAPER),
            TestKind::HalfSibStandard => Some(ThetaIbd::HALF_SIB_STANDARD),
            TestKind::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestKind::ParentChild => "parent-child",
            TestKind::FullSib => "full-sib",
            TestKind::HalfSibPaper => "half-sib-paper",
            TestKind::HalfSibStandard => "half-sib-standard",
            TestKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[arg(long, value_enum, default_value = "full-sib")]
    pub test: TestKind,
    /// Null IBD coefficients `z0,z1,z2` (custom test only; default unrelated).
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<String>,
    /// Alternative IBD coefficients `z0,z1,z2` (custom test only).
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
}

impl TestArgs {
    pub fn thetas(&self) -> Result<(ThetaIbd, ThetaIbd), CliError> {
        let parse = |s: &str| ThetaIbd::parse(s).map_err(|e| CliError::Validation(e.to_string()));
        match self.test.alternative() {
            Some(t1) => {
                if self.theta0.is_some() || self.theta1.is_some() {
                    return Err(CliError::Validation(format!(
                        "--theta0/--theta1 need --test custom (got --test {})",
                        self.test.name()
                    )));
                }
                Ok((ThetaIbd::UNRELATED, t1))
            }
            None => {
                let t1 = self
                    .theta1
                    .as_deref()
                    .ok_or_else(|| CliError::Validation("--test custom needs --theta1".into()))?;
                let t0 = match &self.theta0 {
                    Some(s) => parse(s)?,
                    None => ThetaIbd::UNRELATED,
                };
                Ok((t0, parse(t1)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CbWeights {
    Census,
    Samples,
    Equal,
}

impl From<CbWeights> for PoolWeights {
    fn from(w: CbWeights) -> Self {
        match w {
            CbWeights::Census => PoolWeights::Census,
            CbWeights::Samples => PoolWeights::SampleSizes,
            CbWeights::Equal => PoolWeights::Equal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LrArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[command(flatten)]
    pub test: TestArgs,
    /// Weighting of the pooled frequencies behind CB.
    #[arg(long, value_enum)]
    pub cb_weights: Option<CbWeights>,
    /// Profile CSV of the first individual (`locus,allele1,allele2`).
    pub profile1: PathBuf,
    /// Profile CSV of the second individual.
    pub profile2: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[command(flatten)]
    pub test: TestArgs,
    /// Comma-separated false positive rates.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Monte Carlo replicates per distribution.
    #[arg(long = "B")]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated statistics (LAF, AVG, MAX, MIN, RMAX, RMIN, CB).
    #[arg(long, value_delimiter = ',')]
    pub stats: Vec<Statistic>,
    #[arg(long, value_enum)]
    pub cb_weights: Option<CbWeights>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "kinship-out")]
    pub out: PathBuf,
    /// Draw both null individuals from one subpopulation.
    #[arg(long)]
    pub null_same_subpop: bool,
    /// Use B = 1,000,000 unless --B is given.
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Take panel and subpopulations from this metadata file.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Number of loci when no metadata is given.
    #[arg(long, default_value_t = 15)]
    pub loci: usize,
    /// Number of subpopulations when no metadata is given.
    #[arg(long, default_value_t = 4)]
    pub subpops: usize,
    /// Alleles per locus: one value for every locus, or one per locus.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub alleles: Vec<usize>,
    /// Perturbation scale in [0, 1]; 0 makes all subpopulations identical.
    #[arg(long, default_value_t = 0.1)]
    pub divergence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for `freqs.csv` and `meta.toml`.
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Profile CSVs to check against the table panel and alleles.
    #[arg(long = "profile")]
    pub profiles: Vec<PathBuf>,
}
