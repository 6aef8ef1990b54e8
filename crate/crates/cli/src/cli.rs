use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "rfm-pyramid",
    version,
    about = "RFM scoring, customer pyramids and cohort loyalty tests"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags given here take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for k-means initialisation and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Treat any malformed input row as fatal.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for the parallel parts of the analysis.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Significance level for decisions.
    #[arg(long, global = true)]
    pub significance: Option<f64>,
    /// Scoring rules in JSON; defaults to the built-in expert table.
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    /// Date recency is measured against (YYYY-MM-DD).
    #[arg(long, global = true, value_parser = parse_date)]
    pub analysis_date: Option<NaiveDate>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate a transaction log into rfm.csv.
    Ingest(IngestArgs),
    /// Code every customer 1-5 per dimension into scored.csv.
    Score(ScoreArgs),
    /// Cluster a cohort into Platinum/Gold/Iron/Lead.
    Pyramid(PyramidArgs),
    /// Binomial content validity and Cronbach's alpha for an expert panel.
    ValidateSurvey(ValidateArgs),
    /// Test attitudinal, behavioural and pyramid differences between two cohorts.
    Compare(CompareArgs),
    /// Write seeded synthetic cohorts.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
#[group(required = true, multiple = false)]
pub struct CohortInput {
    /// transactions.csv (needs --analysis-date)
    #[arg(long)]
    pub transactions: Option<PathBuf>,
    /// Pre-aggregated rfm.csv
    #[arg(long)]
    pub rfm: Option<PathBuf>,
    /// Already-coded scored.csv
    #[arg(long)]
    pub scored: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub transactions: PathBuf,
    /// Optional survey.csv to validate alongside.
    #[arg(long)]
    pub survey: Option<PathBuf>,
    /// Population size, to check the survey sample is large enough.
    #[arg(long)]
    pub population: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: CohortInput,
    /// Derive quintile cut points from the data instead of using rules.
    #[arg(long)]
    pub quintiles: bool,
}

#[derive(Debug, Args)]
pub struct PyramidArgs {
    #[command(flatten)]
    pub input: CohortInput,
    #[arg(long, default_value = "cohort")]
    pub cohort: String,
    #[arg(long)]
    pub quintiles: bool,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Expert ratings in survey.csv layout.
    #[arg(long)]
    pub experts: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub cut_point: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Hypothesis {
    /// Attitudinal loyalty (Mann-Whitney U on respondent means).
    H1,
    /// Behavioural loyalty (t-test on combined RFM scores).
    H2,
    /// Pyramid composition (two-proportion z on Gold + Platinum).
    H3,
}

#[derive(Debug, Default, Args)]
pub struct CompareArgs {
    /// Label for cohort a (defaults to the pyramid file's cohort).
    #[arg(long)]
    pub a_name: Option<String>,
    /// Label for cohort b.
    #[arg(long)]
    pub b_name: Option<String>,
    /// Survey responses for cohort a (h1).
    #[arg(long)]
    pub a_survey: Option<PathBuf>,
    /// Survey responses for cohort b (h1).
    #[arg(long)]
    pub b_survey: Option<PathBuf>,
    /// scored.csv for cohort a (h2).
    #[arg(long, conflicts_with = "a_rfm")]
    pub a_scored: Option<PathBuf>,
    /// scored.csv for cohort b (h2).
    #[arg(long, conflicts_with = "b_rfm")]
    pub b_scored: Option<PathBuf>,
    /// rfm.csv for cohort a, scored with --rules (h2).
    #[arg(long)]
    pub a_rfm: Option<PathBuf>,
    /// rfm.csv for cohort b (h2).
    #[arg(long)]
    pub b_rfm: Option<PathBuf>,
    /// pyramid.json for cohort a (h3).
    #[arg(long, conflicts_with = "a_success")]
    pub a_pyramid: Option<PathBuf>,
    /// pyramid.json for cohort b (h3).
    #[arg(long, conflicts_with = "b_success")]
    pub b_pyramid: Option<PathBuf>,
    /// Success count and cohort size as X/N.
    #[arg(long)]
    pub a_success: Option<String>,
    /// As --a-success, for cohort b.
    #[arg(long)]
    pub b_success: Option<String>,
    /// Hypotheses to test; defaults to every one with inputs.
    #[arg(long, value_delimiter = ',')]
    pub hypotheses: Vec<Hypothesis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Customers exactly on (or jittered around) integer centres.
    Planted,
    /// Integer codes whose group means follow the reference centroids.
    CentroidShaped,
    /// Likert questionnaires.
    Survey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Computer,
    Automotive,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, value_enum, default_value = "computer")]
    pub preset: Preset,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Respondents, for surveys.
    #[arg(long, default_value_t = 160)]
    pub n: usize,
    /// Location shift of survey answers relative to the scale midpoint.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
    /// Also write a transaction log (needs --analysis-date).
    #[arg(long)]
    pub transactions: bool,
    #[arg(long)]
    pub prefix: Option<String>,
}
