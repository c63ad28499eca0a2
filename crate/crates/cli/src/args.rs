use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grouplink::blocking::BlockingKind;
use grouplink::cleanup::Gamma;
use grouplink::pipeline::{DatasetKind, Preset};

#[derive(Debug, Parser)]
#[command(name = "grouplink", version, about = "Entity group matching: blocking, matching, graph cleanup, evaluation")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-source benchmark.
    Generate(GenerateArgs),
    /// Produce candidate pairs.
    Block(BlockArgs),
    /// Score candidate pairs.
    Match(MatchArgs),
    /// Build the match graph and clean it up into groups.
    Cleanup(CleanupArgs),
    /// Score groups (and optionally predictions) against ground truth.
    Evaluate(EvaluateArgs),
    /// Split groups and export labeled training pairs.
    ExportPairs(ExportArgs),
    /// Run block, match, cleanup and evaluation in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub groups: usize,
    #[arg(long, default_value_t = 5)]
    pub sources: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base company CSV (name[, city, region, country_code, description]).
    /// Synthesized from the seed when omitted.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Rate applied to every artifact kind.
    #[arg(long)]
    pub artifact_rate: Option<f64>,
    /// Per-kind rate, e.g. `AcronymName=0.3`. Repeatable; wins over --artifact-rate.
    #[arg(long = "rate", value_name = "KIND=P")]
    pub rates: Vec<String>,
    #[arg(long)]
    pub name_jitter_rate: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub min_securities: usize,
    #[arg(long, default_value_t = 2)]
    pub max_securities: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Companies,
    Securities,
}

impl From<KindArg> for DatasetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Companies => DatasetKind::Companies,
            KindArg::Securities => DatasetKind::Securities,
        }
    }
}

/// Dataset selection and record tables.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// One of synthetic-companies, synthetic-securities, real-companies, real-securities.
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    /// Dataset kind when no preset is given.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub companies: Option<PathBuf>,
    #[arg(long)]
    pub securities: Option<PathBuf>,
    /// Company groups CSV consumed by the IssuerMatch blocking.
    #[arg(long)]
    pub company_groups: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlockingArgs {
    /// Blockings, e.g. `IdOverlap+TokenOverlap` (default: from preset).
    #[arg(long, value_parser = parse_blockings)]
    pub blockings: Option<Vec<BlockingKind>>,
    #[arg(long)]
    pub token_top_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatcherArg {
    ExactId,
    NameJaccard,
    External,
}

#[derive(Debug, Args)]
pub struct MatcherArgs {
    #[arg(long, value_enum, default_value = "name-jaccard")]
    pub matcher: MatcherArg,
    /// Match threshold for the name-jaccard matcher.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Externally scored predictions (id_a, id_b, score[, label]).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct CleanupFlags {
    /// Size above which components are cut; a number or `inf`.
    #[arg(long, value_parser = parse_gamma)]
    pub gamma: Option<Gamma>,
    #[arg(long)]
    pub mu: Option<usize>,
    /// Halve gamma (rounding down) after all other settings apply.
    #[arg(long)]
    pub halve_gamma: bool,
    #[arg(long)]
    pub pre_cleanup_limit: Option<usize>,
    /// Leave single-record groups out of cluster purity.
    #[arg(long)]
    pub exclude_singletons: bool,
}

#[derive(Debug, Args)]
pub struct BlockArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub blocking: BlockingArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub candidates: PathBuf,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CleanupArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Predictions CSV from the match stage.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Candidates CSV; supplies blocking provenance for pre-cleanup.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[command(flatten)]
    pub cleanup: CleanupFlags,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,
    /// Post-cleanup groups CSV.
    #[arg(long)]
    pub groups: PathBuf,
    /// Groups before cleanup, for the pre-cleanup stage.
    #[arg(long)]
    pub pre_groups: Option<PathBuf>,
    /// Predictions CSV, for the pairwise stage.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub exclude_singletons: bool,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Ground-truth groups CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Existing splits CSV (group_id, split); computed when omitted.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long, default_value = "0.6,0.2,0.2")]
    pub split_ratios: String,
    #[arg(long, default_value_t = 5)]
    pub neg_ratio: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub blocking: BlockingArgs,
    /// Reuse a candidates CSV instead of running the blockings.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    #[command(flatten)]
    pub cleanup: CleanupFlags,
    /// Ground-truth groups CSV; enables evaluation.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// JSON report path (default: <out-dir>/report.json when --truth is set).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

fn parse_gamma(s: &str) -> Result<Gamma, String> {
    s.parse()
}

fn parse_blockings(s: &str) -> Result<Vec<BlockingKind>, String> {
    grouplink::io::parse_blocking_list(s)
}
