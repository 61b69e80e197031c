//! The `explicable` command-line tool.
//!
//! Subcommands build weight matrices, train and evaluate small classifiers,
//! score competing classifiers, run the three-class loss simulation, verify
//! the loss lemmas and serve the class-pair labeling endpoints.

pub mod commands;
pub mod error;
pub mod lemmas;
pub mod server;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "explicable",
    version,
    about = "Explicability-weighted classification toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a weight matrix.
    #[command(subcommand)]
    Weights(WeightsCommand),
    /// Write a synthetic Gaussian-cluster dataset.
    #[command(allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Train a classifier with the weighted loss.
    #[command(allow_negative_numbers = true)]
    Train(TrainArgs),
    /// Write class probabilities for a dataset.
    Predict(PredictArgs),
    /// Hard and soft explicability scores over shared mistakes.
    Score(ScoreArgs),
    /// Mean loss of each prediction set under each weight matrix.
    LossTable(LossTableArgs),
    /// Sweep the three-class loss landscape.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Check the swap and threshold lemmas on random trials.
    VerifyLemmas(VerifyArgs),
    /// Class-pair labeling sessions.
    #[command(subcommand)]
    Label(LabelCommand),
}

#[derive(Debug, Subcommand)]
pub enum WeightsCommand {
    /// From per-instance label counts.
    Ihl(IhlArgs),
    /// From class-pair Likert ratings.
    Chl(ChlArgs),
    /// From taxonomy path similarity.
    Ekl(EklArgs),
    /// Element-wise mean of several matrices.
    Average(AverageArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Aggregation {
    /// Sum counts over instances, then normalize.
    Pooled,
    /// Normalize each instance, then average.
    Mean,
}

#[derive(Debug, Args)]
pub struct IhlArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Class list with `index,name` columns; defaults to class_0.. names.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Aggregation::Pooled)]
    pub aggregation: Aggregation,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChlArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    /// Skip row normalization.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EklArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Label map with `index,name,node` columns.
    #[arg(long)]
    pub labels: PathBuf,
    /// Skip row normalization.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Cluster centers, `;`-separated points of `,`-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub centers: String,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the class list.
    #[arg(long)]
    pub classes_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Weight matrix; identity when omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Class list; taken from the weight matrix when omitted.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch mean loss as `epoch,loss`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub predictions: Vec<PathBuf>,
    /// Classifier names, one per prediction file; file stems by default.
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossTableArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub predictions: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    /// `NAME=weights.csv`, repeatable.
    #[arg(long = "loss", required = true, value_parser = parse_named_path)]
    pub losses: Vec<(String, PathBuf)>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub wc: f64,
    #[arg(long)]
    pub wf: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_correct: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5, 0.7])]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub verdict: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum LabelCommand {
    /// Serve the labeling endpoints.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Class list with `index,name` columns.
    #[arg(long)]
    pub classes: PathBuf,
    /// Directory with one sub-directory of example images per class name.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Ratings CSV; appended to, and replayed on restart.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Seed for per-rater pair order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Attention checks as `class,expected_score`.
    #[arg(long)]
    pub attention: Option<PathBuf>,
}

fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_string(), PathBuf::from(p))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Weights(cmd) => commands::weights(cmd),
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Score(a) => commands::score(a),
        Command::LossTable(a) => commands::loss_table(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::VerifyLemmas(a) => commands::verify_lemmas(a),
        Command::Label(LabelCommand::Serve(a)) => server::serve(a),
    }
}
