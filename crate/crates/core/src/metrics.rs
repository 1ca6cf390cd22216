//! Exact match, partial match and sentence-level BLEU over generated answers.
//!
//! Partial match here means the prediction and the gold answer share at
//! least one token (case-folded). BLEU is computed per sentence with
//! `N = min(4, |pred|, |gold|)`, add-one smoothing on the n ≥ 2 precisions
//! and the usual brevity penalty; a set's BLEU is the mean of sentence
//! scores.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::{QaInstance, Vocabulary};
use crate::error::Result;
use crate::model::{encode_instance, predict};
use crate::params::ModelParameters;

fn fold(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// 1.0 iff the sequences are identical after case folding.
pub fn exact_match(pred: &[String], gold: &[String]) -> f64 {
    if fold(pred) == fold(gold) {
        1.0
    } else {
        0.0
    }
}

/// 1.0 iff the prediction shares at least one token with the gold answer.
pub fn partial_match(pred: &[String], gold: &[String]) -> f64 {
    let gold = fold(gold);
    if fold(pred).iter().any(|t| gold.contains(t)) {
        1.0
    } else {
        0.0
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Smoothed sentence-level BLEU in `[0, 1]`.
pub fn bleu(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let (pred, gold) = (fold(pred), fold(gold));
    let max_n = 4.min(pred.len()).min(gold.len());
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand = ngram_counts(&pred, n);
        let refs = ngram_counts(&gold, n);
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let total = pred.len() + 1 - n;
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if precision == 0.0 {
            return 0.0;
        }
        log_sum += precision.ln();
    }
    let brevity = if pred.len() < gold.len() {
        (1.0 - gold.len() as f64 / pred.len() as f64).exp()
    } else {
        1.0
    };
    brevity * (log_sum / max_n as f64).exp()
}

/// Scores of one evaluated question.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleScore {
    pub question: Vec<String>,
    pub gold: Vec<String>,
    pub prediction: Vec<String>,
    pub em: f64,
    pub pm: f64,
    pub bleu: f64,
}

impl ExampleScore {
    pub fn new(question: Vec<String>, gold: Vec<String>, prediction: Vec<String>) -> Self {
        Self {
            em: exact_match(&prediction, &gold),
            pm: partial_match(&prediction, &gold),
            bleu: bleu(&prediction, &gold),
            question,
            gold,
            prediction,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub ema: f64,
    pub pma: f64,
    pub bleu: f64,
    pub n_examples: usize,
    pub details: Vec<ExampleScore>,
}

impl MetricsReport {
    /// Means over `details`, summed in order.
    pub fn from_details(details: Vec<ExampleScore>) -> Self {
        let n = details.len();
        let mean = |f: fn(&ExampleScore) -> f64| {
            if n == 0 {
                0.0
            } else {
                details.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Self {
            ema: mean(|d| d.em),
            pma: mean(|d| d.pm),
            bleu: mean(|d| d.bleu),
            n_examples: n,
            details,
        }
    }

    /// Per-example rows `question  gold  prediction  em  pm  bleu`, then a
    /// summary line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("question\tgold\tprediction\tem\tpm\tbleu\n");
        for d in &self.details {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}",
                d.question.join(" "),
                d.gold.join(" "),
                d.prediction.join(" "),
                d.em,
                d.pm,
                d.bleu
            );
        }
        let _ = writeln!(
            out,
            "summary\tn={}\tema={:.6}\tpma={:.6}\tbleu={:.6}",
            self.n_examples, self.ema, self.pma, self.bleu
        );
        out
    }

    /// Human-readable summary with fractions and one-decimal percentages.
    pub fn summary(&self) -> String {
        format!(
            "n={}  EMA {:.4} ({:.1}%)  PMA {:.4} ({:.1}%)  BLEU {:.4} ({:.1}%)",
            self.n_examples,
            self.ema,
            100.0 * self.ema,
            self.pma,
            100.0 * self.pma,
            self.bleu,
            100.0 * self.bleu
        )
    }
}

/// Greedy-decodes every instance and aggregates the three scores.
pub fn evaluate(
    params: &ModelParameters,
    vocab: &Vocabulary,
    dataset: &[QaInstance],
    hops: usize,
    max_len: usize,
) -> Result<MetricsReport> {
    let mut details = Vec::with_capacity(dataset.len());
    for inst in dataset {
        let enc = encode_instance(inst, vocab)?;
        let pred = predict(params, &enc, hops, max_len, vocab.eos())?;
        let words = pred
            .words
            .iter()
            .map(|&w| vocab.token(w).unwrap_or(crate::corpus::UNK).to_string())
            .collect();
        details.push(ExampleScore::new(
            inst.question.clone(),
            inst.answer.clone(),
            words,
        ));
    }
    Ok(MetricsReport::from_details(details))
}
