use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, Parser, Subcommand};
use ltmn::training::{Optimizer, TrainingConfig};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "ltmn",
    version,
    about = "Long-term memory network: train, evaluate and query a story question-answering model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite every story file in a directory with the multi-word answer table
    GenerateMultiword(GenerateArgs),
    /// Train a model on a story file and write the best checkpoint
    Train(TrainArgs),
    /// Score a checkpoint on a story file (exact match, partial match, BLEU)
    Eval(EvalArgs),
    /// Answer one question about a story
    Answer(AnswerArgs),
    /// Finite-difference check of every parameter gradient on a tiny model
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Directory of single-word story files
    #[arg(long, value_name = "DIR")]
    pub in_dir: PathBuf,
    /// Destination directory, created if missing
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Replacement table, one `word<TAB>phrase` per line [default: built-in table]
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
}

/// Hidden width: a number, or `auto` for the embedding width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hidden(pub Option<usize>);

impl FromStr for Hidden {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Hidden(None));
        }
        s.parse::<usize>()
            .map(|n| Hidden(Some(n)))
            .map_err(|_| format!("expected a positive integer or `auto`, got {s:?}"))
    }
}

impl fmt::Display for Hidden {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct ModelFlags {
    /// Step size
    #[arg(long, default_value_t = 0.002)]
    pub learning_rate: f64,
    /// Examples per update
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Passes over the training set
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Standard deviation of the Gaussian weight initialisation (sqrt of 0.1)
    #[arg(long, default_value_t = 0.1f64.sqrt())]
    pub init_std: f64,
    /// Share of the training file held out for model selection
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
    /// Seed for initialisation, splitting and shuffling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Attention passes over memory
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    /// Embedding width
    #[arg(long = "dim", short = 'd', default_value_t = 100)]
    pub dim: usize,
    /// Decoder width, or `auto` for the embedding width
    #[arg(long, default_value_t = Hidden(None))]
    pub hidden: Hidden,
    /// Longest generated answer, in words
    #[arg(long, default_value_t = 5)]
    pub max_len: usize,
    /// Global gradient-norm bound
    #[arg(long, default_value_t = 40.0)]
    pub grad_clip: f64,
    /// Embed questions with the sentence matrix
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_a_b: bool,
    /// Add a learned recency token to each memory sentence
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub temporal: bool,
    /// Parameter update rule: adam or sgd
    #[arg(long, default_value_t = Optimizer::Adam)]
    pub optimizer: Optimizer,
    /// Word vectors (word2vec text format) for the embedding matrices [default: none]
    #[arg(long, value_name = "FILE")]
    pub pretrained: Option<PathBuf>,
    /// `key = value` lines; explicit flags take precedence [default: none]
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

impl ModelFlags {
    pub fn to_config(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            init_std: self.init_std,
            validation_fraction: self.validation_fraction,
            seed: self.seed,
            hops: self.hops,
            d: self.dim,
            hidden: self.hidden.0,
            max_len: self.max_len,
            grad_clip: self.grad_clip,
            tie_a_b: self.tie_a_b,
            optimizer: self.optimizer,
            temporal: self.temporal,
            pretrained_path: self.pretrained.clone(),
        }
    }

    /// Overlays `key = value` lines onto every flag that was not given on
    /// the command line.
    pub fn merge_file(&mut self, text: &str, matches: &ArgMatches) -> Result<(), Failure> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Failure::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let id = if key == "d" { "dim" } else { key.as_str() };
            let bad = |e: String| Failure::Usage(format!("config line {}: {key}: {e}", n + 1));
            if !matches!(
                id,
                "learning_rate"
                    | "batch_size"
                    | "epochs"
                    | "init_std"
                    | "validation_fraction"
                    | "seed"
                    | "hops"
                    | "dim"
                    | "hidden"
                    | "max_len"
                    | "grad_clip"
                    | "tie_a_b"
                    | "temporal"
                    | "optimizer"
                    | "pretrained"
            ) {
                return Err(Failure::Usage(format!(
                    "config line {}: unknown key {key:?}",
                    n + 1
                )));
            }
            if matches.value_source(id) == Some(ValueSource::CommandLine) {
                continue;
            }
            match id {
                "learning_rate" => self.learning_rate = parse(value).map_err(bad)?,
                "batch_size" => self.batch_size = parse(value).map_err(bad)?,
                "epochs" => self.epochs = parse(value).map_err(bad)?,
                "init_std" => self.init_std = parse(value).map_err(bad)?,
                "validation_fraction" => self.validation_fraction = parse(value).map_err(bad)?,
                "seed" => self.seed = parse(value).map_err(bad)?,
                "hops" => self.hops = parse(value).map_err(bad)?,
                "dim" => self.dim = parse(value).map_err(bad)?,
                "hidden" => self.hidden = parse(value).map_err(bad)?,
                "max_len" => self.max_len = parse(value).map_err(bad)?,
                "grad_clip" => self.grad_clip = parse(value).map_err(bad)?,
                "tie_a_b" => self.tie_a_b = parse(value).map_err(bad)?,
                "temporal" => self.temporal = parse(value).map_err(bad)?,
                "optimizer" => self.optimizer = parse(value).map_err(bad)?,
                _ => {
                    self.pretrained = match value {
                        "" | "none" => None,
                        p => Some(PathBuf::from(p)),
                    }
                }
            }
        }
        Ok(())
    }

    /// Flags, then the config file, then defaults.
    pub fn resolve(&self, matches: &ArgMatches) -> Result<TrainingConfig, Failure> {
        let mut flags = self.clone();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            flags.merge_file(&text, matches)?;
        }
        let config = flags.to_config();
        config
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

fn parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("{e} ({s:?})"))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training story file
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    /// Checkpoint to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Epoch log, `epoch<TAB>train_loss<TAB>val_ema` per line [default: <out>.log]
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Story file to score
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    /// Per-example report [default: <checkpoint>.eval.tsv]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnswerArgs {
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Story file, one sentence per line (leading line numbers are ignored) [default: none]
    #[arg(long, value_name = "FILE", conflicts_with = "sentence")]
    pub story: Option<PathBuf>,
    /// A story sentence; repeat for each sentence in order [default: none]
    #[arg(long, value_name = "TEXT")]
    pub sentence: Vec<String>,
    /// The question
    #[arg(long, value_name = "TEXT")]
    pub question: String,
    /// Also print the attention over story sentences
    #[arg(long, default_value_t = false)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Finite-difference step
    #[arg(long, default_value_t = ltmn::gradcheck::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Largest accepted relative error
    #[arg(long, default_value_t = ltmn::gradcheck::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Seed for the parameter draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the parameter draw
    #[arg(long, default_value_t = 0.1f64.sqrt())]
    pub init_std: f64,
    /// Attention passes over memory
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    /// Embedding width
    #[arg(long = "dim", short = 'd', default_value_t = 8)]
    pub dim: usize,
    /// Decoder width, or `auto` for the embedding width
    #[arg(long, default_value_t = Hidden(None))]
    pub hidden: Hidden,
    /// Embed questions with the sentence matrix
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_a_b: bool,
    /// Add a learned recency token to each memory sentence
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub temporal: bool,
    /// Test hook: corrupt one analytic gradient entry so the check must fail
    #[arg(long, default_value_t = false)]
    pub inject_gradient_error: bool,
}

impl GradcheckArgs {
    pub fn to_config(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            init_std: self.init_std,
            hops: self.hops,
            d: self.dim,
            hidden: self.hidden.0,
            tie_a_b: self.tie_a_b,
            temporal: self.temporal,
            ..TrainingConfig::default()
        }
    }
}
