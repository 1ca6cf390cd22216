//! Bag-of-words sentence encoding, the `A`/`B` embeddings, and pretrained
//! vector loading.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Matrix, Var};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub d: usize,
    /// Use `A` for questions as well.
    pub tie_a_b: bool,
    pub pretrained_path: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            d: 100,
            tie_a_b: false,
            pretrained_path: None,
        }
    }
}

/// Sparse token-count vector over a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct BagOfWords {
    dim: usize,
    counts: BTreeMap<usize, f64>,
}

impl BagOfWords {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self, index: usize) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0.0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, f64> {
        &self.counts
    }

    pub fn add(&mut self, index: usize) {
        *self.counts.entry(index).or_insert(0.0) += 1.0;
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, 1);
        for (&i, &c) in &self.counts {
            m.as_mut_slice()[i] = c;
        }
        m
    }
}

/// Token counts plus one `<EOS>`; unknown tokens count toward `<UNK>`.
pub fn encode_bow(sentence: &[String], vocab: &Vocabulary) -> BagOfWords {
    let mut counts = BTreeMap::new();
    for tok in sentence {
        *counts.entry(vocab.encode(tok)).or_insert(0.0) += 1.0;
    }
    *counts.entry(vocab.eos()).or_insert(0.0) += 1.0;
    BagOfWords {
        dim: vocab.len(),
        counts,
    }
}

/// Stacks count vectors as the columns of a `|V| x n` matrix.
pub fn stack_columns(vectors: &[BagOfWords], dim: usize) -> Matrix {
    let mut m = Matrix::zeros(dim, vectors.len());
    for (j, x) in vectors.iter().enumerate() {
        for (&i, &c) in &x.counts {
            m[(i, j)] = c;
        }
    }
    m
}

fn check_width(embedding: &Matrix, dim: usize) -> Result<()> {
    if embedding.cols() != dim {
        return Err(crate::autodiff::AutodiffError::Shape {
            op: "embed",
            lhs: embedding.shape(),
            rhs: (dim, 1),
        }
        .into());
    }
    Ok(())
}

/// `m_i = A x_i` for every sentence; returns the `d x n` matrix whose
/// columns are the memories, in sentence order.
pub fn embed_sentences(g: &mut Graph, sentences: &Matrix, a: Var) -> Result<Var> {
    check_width(g.value(a), sentences.rows())?;
    let x = g.constant(sentences.clone());
    Ok(g.matmul(a, x)?)
}

/// `u = B q` for a `|V| x 1` count vector.
pub fn embed_question(g: &mut Graph, question: &Matrix, b: Var) -> Result<Var> {
    embed_sentences(g, question, b)
}

/// Pretrained vectors aligned to a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedEmbedding {
    /// `d x |V|`, one column per vocabulary entry.
    pub matrix: Matrix,
    /// Non-reserved vocabulary tokens found in the file.
    pub covered: usize,
    /// `covered` over the number of non-reserved vocabulary tokens.
    pub coverage: f64,
}

/// Reads `token v1 … vd` lines into the columns of a `d x |V|` matrix.
///
/// Tokens missing from the file keep a draw from `N(0, init_std²)`.
pub fn load_pretrained<R: Rng>(
    path: &Path,
    vocab: &Vocabulary,
    d: usize,
    init_std: f64,
    rng: &mut R,
) -> Result<PretrainedEmbedding> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pretrained(&text, &path.display().to_string(), vocab, d, init_std, rng)
}

/// A word2vec `count dim` first line.
fn is_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
}

pub fn parse_pretrained<R: Rng>(
    text: &str,
    source: &str,
    vocab: &Vocabulary,
    d: usize,
    init_std: f64,
    rng: &mut R,
) -> Result<PretrainedEmbedding> {
    let format = |line: usize, message: String| Error::Format {
        path: source.to_string(),
        message: format!("line {line}: {message}"),
    };
    let normal = Normal::new(0.0, init_std)
        .map_err(|e| Error::contract(format!("invalid init std {init_std}: {e}")))?;
    let mut matrix = Matrix::zeros(d, vocab.len());
    matrix
        .as_mut_slice()
        .iter_mut()
        .for_each(|x| *x = normal.sample(rng));

    let mut file_dim: Option<usize> = None;
    let mut seen = vec![false; vocab.len()];
    for (i, line) in text.lines().enumerate() {
        if i == 0 && is_header(line) {
            continue;
        }
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format(i + 1, format!("{f:?} is not a number")))
            })
            .collect::<Result<_>>()?;
        match file_dim {
            None => {
                if values.len() != d {
                    return Err(format(
                        i + 1,
                        format!(
                            "vectors have {} components, model expects {d}",
                            values.len()
                        ),
                    ));
                }
                file_dim = Some(values.len());
            }
            Some(n) if n != values.len() => {
                return Err(format(
                    i + 1,
                    format!(
                        "vector has {} components, earlier lines have {n}",
                        values.len()
                    ),
                ));
            }
            Some(_) => {}
        }
        if let Some(j) = vocab.get(token) {
            matrix.set_column(j, &values);
            seen[j] = true;
        }
    }
    let candidates = vocab.len() - crate::corpus::RESERVED.len();
    let covered = seen
        .iter()
        .enumerate()
        .filter(|&(j, &s)| s && !vocab.is_reserved(j))
        .count();
    let coverage = if candidates == 0 {
        0.0
    } else {
        covered as f64 / candidates as f64
    };
    if covered == 0 {
        log::warn!("{source}: no vocabulary token has a pretrained vector");
    }
    Ok(PretrainedEmbedding {
        matrix,
        covered,
        coverage,
    })
}
