use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ntarget: ",
    env!("TEXTSHIELD_TARGET"),
    "\nprofile: ",
    env!("TEXTSHIELD_PROFILE"),
);

/// Rewards, OCR rectification and evaluation for tampered text detection.
#[derive(Debug, Parser)]
#[command(name = "textshield", version, long_version = LONG_VERSION)]
pub struct Cli {
    /// Worker threads for batch stages (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw completions ({id, raw} lines) into prediction records.
    Parse(ParseArgs),
    /// Score predictions against ground truth with the five rewards.
    Reward(RewardArgs),
    /// Replace predicted tampered-text boxes with matching OCR boxes.
    Rectify(RectifyArgs),
    /// Compute Cls. / OCR / Loc. / Res. per evaluation subset.
    Evaluate(EvaluateArgs),
    /// Convert between mask images and 32x32 mask strings.
    #[command(subcommand)]
    Mask(MaskCommand),
    /// Run a single metric primitive (for debugging).
    Metrics(MetricsArgs),
    /// Synthetic corpora.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// JSONL of {id, raw} completions.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Prediction records for completions with a well-formed answer.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Per-completion diagnostics (default: <out>.diagnostics.jsonl).
    #[arg(long, value_name = "FILE")]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RewardArgs {
    /// Prediction records or raw {id, raw} completions, one per line.
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// Output JSONL (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Component weights, e.g. cls=1,method=1,loc=1,ocr=1,format=1.
    #[arg(long, default_value = "cls=1,method=1,loc=1,ocr=1,format=1")]
    pub weights: String,
    /// Attach group-relative advantages over consecutive groups of N lines.
    #[arg(long, value_name = "N")]
    pub group_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RectifyArgs {
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub ocr: PathBuf,
    /// Rectified prediction records (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Maximum normed Levenshtein distance for an OCR match.
    #[arg(long, default_value_t = textshield_core::rectify::DEFAULT_MATCH_THRESHOLD)]
    pub threshold: f64,
    /// Per-record rectification outcomes.
    #[arg(long, value_name = "FILE")]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportKind {
    Md,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DenominatorArg {
    Tampered,
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// Rectify predictions against --ocr before scoring.
    #[arg(long, requires = "ocr")]
    pub rectified: bool,
    #[arg(long, value_name = "FILE")]
    pub ocr: Option<PathBuf>,
    #[arg(long, default_value_t = textshield_core::rectify::DEFAULT_MATCH_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "md")]
    pub report: ReportKind,
    /// Report file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Row label in the report.
    #[arg(long, default_value = "textshield")]
    pub label: String,
    /// Images averaged for OCR and Loc.
    #[arg(long, value_enum, default_value = "tampered")]
    pub denominator: DenominatorArg,
    /// Tolerated prediction ids without ground truth before exiting with 3.
    #[arg(long, default_value_t = 0)]
    pub max_unmatched: usize,
}

#[derive(Debug, Subcommand)]
pub enum MaskCommand {
    /// Mask image (PGM; PNG with the `png` feature) to a 1024-char string.
    Encode {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Also print the minimum bounding box of the tampered pixels.
        #[arg(long)]
        bbox: bool,
    },
    /// 1024-char mask string to a 32x32 binary PGM.
    Decode {
        /// The mask string; read from --input when omitted.
        #[arg(long, value_name = "BITS", conflicts_with = "input")]
        string: Option<String>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Primitive {
    /// Levenshtein distance.
    Lev,
    /// Normed Levenshtein distance.
    Nlev,
    Tokenize,
    Bleu,
    Rouge,
    Cosine,
    /// Mean of cosine, Rouge-L and BLEU.
    Res,
    /// Boxes given as x1,y1,x2,y2.
    Iou,
    Diou,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(value_enum)]
    pub primitive: Primitive,
    /// First operand (hypothesis / box A).
    pub a: String,
    /// Second operand (reference / box B); unused by tokenize.
    pub b: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    /// Write groundtruth.jsonl, ocr.jsonl and predictions.jsonl.
    Gen {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Fraction of characters substituted in predicted texts.
        #[arg(long, default_value_t = 0.1)]
        text_noise: f64,
        /// Mean IoU of predicted boxes; 1 disables jitter.
        #[arg(long, default_value_t = 0.35)]
        target_iou: f64,
        #[arg(long, default_value_t = 0.05)]
        iou_spread: f64,
        #[arg(long, default_value_t = 0.05)]
        duplicate_rate: f64,
    },
}
