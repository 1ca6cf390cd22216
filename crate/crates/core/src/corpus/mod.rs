//! Story corpora: parsing, the multi-word answer transform, vocabularies and
//! train/validation splits.

mod babi;
mod replace;
mod vocab;

pub use babi::{
    instances_from_stories, load_instances, parse_babi, serialize_babi, Story, StoryLine,
};
pub use replace::{apply_replacements, Replaced, ReplacementTable, DEFAULT_REPLACEMENTS};
pub use vocab::{time_token, Vocabulary, BOA, EOS, PAD, RESERVED, UNK};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("story {story}, line {line_no}: question has no preceding statements")]
    EmptyContext { story: usize, line_no: usize },
    #[error("invalid replacement table: {0}")]
    InvalidTable(String),
    #[error("{0}")]
    Contract(String),
}

/// One question with everything the model sees and the gold answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QaInstance {
    /// Every statement of the story preceding the question, in order.
    pub context: Vec<Vec<String>>,
    pub question: Vec<String>,
    /// Gold answer tokens, without `<EOS>`.
    pub answer: Vec<String>,
    /// Diagnostic only; never used for training.
    pub supporting_ids: Option<Vec<usize>>,
    pub story_id: usize,
    pub line_no: usize,
}

impl QaInstance {
    /// All context, question and answer tokens in reading order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.context
            .iter()
            .flatten()
            .chain(&self.question)
            .chain(&self.answer)
            .map(String::as_str)
    }

    /// Provenance key, unique within one corpus file.
    pub fn provenance(&self) -> (usize, usize) {
        (self.story_id, self.line_no)
    }
}

/// Lowercases, detaches `.`, `?` and `,`, and splits on whitespace.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(sentence.len() + 8);
    for c in sentence.chars() {
        if matches!(c, '.' | '?' | ',') {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.extend(c.to_lowercase());
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

/// Answer field tokens: comma- or whitespace-separated, lowercased.
pub fn tokenize_answer(field: &str) -> Vec<String> {
    field
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Seeded shuffle, then `round(fraction * n)` instances (kept within
/// `1..n`) go to validation and the rest to training.
pub fn split_train_validation(
    instances: Vec<QaInstance>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<QaInstance>, Vec<QaInstance>), CorpusError> {
    let n = instances.len();
    if n < 2 {
        return Err(CorpusError::Contract(format!(
            "cannot split {n} instance(s) into training and validation"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::Contract(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    // Keep validation in shuffled order and training in file order.
    let mut slots: Vec<Option<QaInstance>> = instances.into_iter().map(Some).collect();
    for &i in &order[..n_val] {
        val.push(slots[i].take().expect("each index taken once"));
    }
    for (i, slot) in slots.into_iter().enumerate() {
        if !is_val[i] {
            train.push(slot.expect("training slot untouched"));
        }
    }
    Ok((train, val))
}
