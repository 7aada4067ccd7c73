use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "sbe", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean-pool a contextual embedding batch (CEB) file into a word-vector table
    Distill(DistillArgs),
    /// Build the vocabulary and embedding matrix for a corpus
    BuildMatrix(BuildMatrixArgs),
    /// Print class counts, entropy and balance of a corpus
    Balance(BalanceArgs),
    /// Train one classifier with a stratified validation holdout
    Train(TrainArgs),
    /// Stratified k-fold cross-validation of one classifier
    Kfold(KfoldArgs),
    /// Compare finished k-fold runs in one table
    Report(ReportArgs),
    /// Finite-difference gradient check of an architecture at tiny sizes
    Gradcheck(GradcheckArgs),
}

/// Seeds are stored as TOML integers, which are signed 64-bit.
fn seed_range() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(0..=i64::MAX as u64)
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!(
            "delimiter must be one ASCII character or `tab`, got `{s}`"
        )),
    }
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Delimiter-separated file with `comment` and `isHate` columns
    pub corpus: PathBuf,
    /// Field delimiter (one ASCII character, or `tab`)
    #[arg(long, default_value = ";", value_parser = parse_delimiter)]
    pub delimiter: u8,
    /// Vote fraction at or above which a row is labelled hate
    #[arg(long, default_value_t = 0.5)]
    pub label_threshold: f64,
}

#[derive(Args, Debug)]
pub struct DistillArgs {
    /// CEB file: header `CEB 1 <dim>`, then one `word<TAB>floats` line per occurrence
    pub ceb: PathBuf,
    /// Output directory; the table is written to `<out>/embeddings.txt`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BuildMatrixArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Word-vector table(s); two tables are concatenated
    #[arg(long = "table", required = true, num_args = 1, action = clap::ArgAction::Append)]
    pub tables: Vec<PathBuf>,
    /// Output directory for `vocab.tsv` and `matrix.bin`
    #[arg(long)]
    pub out: PathBuf,
    /// Global seed (out-of-vocabulary fallback vectors)
    #[arg(long, default_value_t = 0, value_parser = seed_range())]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BalanceArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

/// Model and schedule settings shared by `train` and `kfold`.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Word-vector table(s); two tables are concatenated
    #[arg(long = "table", required = true, num_args = 1, action = clap::ArgAction::Append)]
    pub tables: Vec<PathBuf>,
    /// cnn_attention, cnn_lstm, lstm, bilstm, bilstm_attention or gru
    #[arg(long)]
    pub arch: Option<String>,
    /// static_be, word_vectors or concat [default: static_be, or concat with two tables]
    #[arg(long)]
    pub embedding_source: Option<String>,
    /// Start from a resolved-config file instead of the reference configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Global seed; every component seed is derived from it
    #[arg(long, default_value_t = 0, value_parser = seed_range())]
    pub seed: u64,
    /// Row label in reports [default: "<architecture> + <embedding>"]
    #[arg(long)]
    pub label: Option<String>,

    /// Tokens per example [reference: 64]
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Recurrent units per direction [reference: 128 for lstm/gru, 64 otherwise]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Convolution filters [reference: 64]
    #[arg(long)]
    pub conv_filters: Option<usize>,
    /// Convolution width [reference: 3]
    #[arg(long)]
    pub conv_width: Option<usize>,
    /// Max-pool size [reference: 2]
    #[arg(long)]
    pub pool_size: Option<usize>,
    /// Attention scoring width [reference: width of its input]
    #[arg(long)]
    pub attention_units: Option<usize>,
    /// Dropout rate after the embedding [reference: 0.2]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Fine-tune the embedding matrix [reference: frozen]
    #[arg(long)]
    pub trainable_embeddings: bool,

    /// Maximum epochs [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 10]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Minimum validation-loss decrease that counts as improvement [default: 1e-5]
    #[arg(long)]
    pub min_delta: Option<f64>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct KfoldArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of folds
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Folds trained in parallel
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// k-fold run directories (each containing `aggregate-metrics`)
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Output directory for `report.md` and `report.csv`
    #[arg(long)]
    pub out: PathBuf,
    /// Which fold aggregate to tabulate: micro or macro
    #[arg(long, default_value = "micro", value_parser = ["micro", "macro"])]
    pub aggregate: String,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Architecture name, or `all`
    #[arg(long, default_value = "all")]
    pub arch: String,
    /// Input sequence length
    #[arg(long, default_value_t = 5)]
    pub length: usize,
    /// Maximum accepted relative error
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0, value_parser = seed_range())]
    pub seed: u64,
    /// Test hook: perturb every analytic gradient entry by this amount
    #[arg(long, hide = true)]
    pub corrupt: Option<f64>,
}
