use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dysalign", version, about = "Dysfluency simulation, alignment, detection and evaluation")]
pub struct Cli {
    /// Seed for all randomness; generated and printed when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inject dysfluencies into a fluent corpus.
    Simulate(SimulateArgs),
    /// Align reference and transcription sequences and dump the spans.
    Align(AlignArgs),
    /// Detect dysfluency events from reference/transcription alignments.
    Detect(DetectArgs),
    /// Score predicted events against a gold corpus.
    Eval(EvalArgs),
    /// Gestural-score utilities.
    #[command(subcommand)]
    Gesture(GestureCommand),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `all` or a comma-separated list of kinds.
    #[arg(long, default_value = "all")]
    pub kinds: String,
    /// Per-kind counts as CSV.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Records per requested kind.
    #[arg(long, conflicts_with = "auto")]
    pub per_kind: Option<usize>,
    /// Total records with kinds drawn uniformly (default: one per base record).
    #[arg(long)]
    pub auto: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Lcs,
    Dtw,
    Csa,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file of per-record alignments.
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long, default_value = "ref_phonemes")]
    pub ref_field: String,
    #[arg(long, default_value = "dys_phonemes")]
    pub hyp_field: String,
    #[arg(long, value_enum, default_value_t = Algo::Lcs)]
    pub algo: Algo,
    /// Jump decay for the CSA loss.
    #[arg(long, default_value_t = dysalign_core::align::DEFAULT_DELTA)]
    pub delta: f64,
    /// Embedding fields for CSA; one-hot symbols when absent.
    #[arg(long, requires = "hyp_emb_field")]
    pub ref_emb_field: Option<String>,
    #[arg(long, requires = "ref_emb_field")]
    pub hyp_emb_field: Option<String>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum pause length reported as a block, in seconds.
    #[arg(long, default_value_t = 0.5)]
    pub block_min: f64,
    /// Minimum duration ratio reported as a prolongation.
    #[arg(long, default_value_t = 5.0)]
    pub prolong_min: f64,
    /// Expected phoneme duration in seconds.
    #[arg(long, default_value_t = 0.08)]
    pub expected_dur: f64,
    /// Skip word-level repetition and missing-word events.
    #[arg(long)]
    pub no_word_level: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, default_value_t = dysalign_core::utterance::FRAME_HZ)]
    pub frame_hz: f64,
    /// dPER edit weights as `sub,ins,del`.
    #[arg(long, default_value = "1,1,1")]
    pub dper_weights: String,
}

#[derive(Debug, Subcommand)]
pub enum GestureCommand {
    /// Fit a convolutive NMF to a nonnegative matrix.
    Fit(GestureFitArgs),
}

#[derive(Debug, Args)]
pub struct GestureFitArgs {
    /// Nonnegative channels-by-frames matrix (JSON or GSM1).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fit summary (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel tensor output; `.gsm`/`.bin` selects the binary format.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Activation matrix output.
    #[arg(long)]
    pub score: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub t_window: usize,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
}
