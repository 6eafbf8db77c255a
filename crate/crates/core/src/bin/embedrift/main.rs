//! `embedrift` command-line interface.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use embedrift::{Error, VectorFormat};

#[derive(Parser)]
#[command(
    name = "embedrift",
    version,
    about = "Refine static token embeddings on a domain corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine pre-trained vectors over a corpus and record every update.
    Refine(RefineArgs),
    /// Print nearest neighbors of tokens, optionally next to the original vectors.
    Neighbors(NeighborArgs),
    /// Cosine between refined and original vectors.
    Drift(DriftArgs),
    /// Export PCA-projected update trajectories as CSV.
    Trajectory(TrajectoryArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Auto,
    Bin,
    Text,
}

impl From<FormatArg> for VectorFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => VectorFormat::Auto,
            FormatArg::Bin => VectorFormat::Binary,
            FormatArg::Text => VectorFormat::Text,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum CorpusFormat {
    Plain,
    Tsv,
}

#[derive(Args)]
struct RefineArgs {
    /// Pre-trained vectors (word2vec binary or text).
    #[arg(long)]
    vectors: PathBuf,
    /// Vector file format; `auto` treats `.bin` files as binary.
    #[arg(long, value_enum, default_value = "auto")]
    vectors_format: FormatArg,
    /// Corpus file; repeat for several files, processed in order.
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,
    /// `tsv` expects token<TAB>lemma<TAB>pos rows; `plain` tokenizes raw text.
    #[arg(long, value_enum, default_value = "tsv")]
    format: CorpusFormat,
    /// Context window size in tokens (odd, at least 3).
    #[arg(long, default_value_t = 13)]
    window: usize,
    /// Learning rate applied to the neighbor sum.
    #[arg(long, default_value_t = 0.01)]
    alpha: f32,
    #[arg(long, default_value_t = 2)]
    epochs: u32,
    /// Stopword list, one entry per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Comma-separated POS tags kept from tagged input.
    #[arg(long, value_delimiter = ',', default_value = "ADJ,ADV,NOUN,PROPN,VERB")]
    pos: Vec<String>,
    /// Use the surface token instead of the lemma column.
    #[arg(long)]
    no_lemma: bool,
    /// Use the pre-trained vectors as they are instead of unit-normalizing them.
    #[arg(long)]
    no_normalize_pretrained: bool,
    /// Also write pre-trained entries that never occur in the corpus.
    #[arg(long)]
    include_pretrained: bool,
    /// Output directory for refined.vec, trajectory.jsonl and run.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NeighborArgs {
    #[arg(long)]
    refined: PathBuf,
    /// Original vectors for a side-by-side comparison.
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    vectors_format: FormatArg,
    #[arg(long, required = true)]
    token: Vec<String>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DriftArgs {
    #[arg(long)]
    refined: PathBuf,
    #[arg(long)]
    original: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    vectors_format: FormatArg,
    /// Tokens to report; defaults to every token present in both tables.
    #[arg(long)]
    token: Vec<String>,
    /// Append the mean over tokens present in both tables.
    #[arg(long)]
    mean: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct TrajectoryArgs {
    /// trajectory.jsonl written by `refine`.
    #[arg(long)]
    trajectory: PathBuf,
    /// The pre-trained vectors used for the run.
    #[arg(long)]
    original: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    vectors_format: FormatArg,
    /// One or two tokens.
    #[arg(long, required = true, num_args = 1)]
    token: Vec<String>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    dims: u8,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 3,
        Error::UnknownToken { .. } => 5,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Refine(args) => commands::refine(args),
        Command::Neighbors(args) => commands::neighbors(args),
        Command::Drift(args) => commands::drift(args),
        Command::Trajectory(args) => commands::trajectory(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("embedrift: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
