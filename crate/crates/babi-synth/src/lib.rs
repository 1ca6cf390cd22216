//! Synthetic stories in the bAbI text format for the twenty task families.
//!
//! Each generator simulates a small world and emits numbered statement lines
//! and tab-separated question lines (`question<TAB>answer<TAB>supporting ids`)
//! using the vocabulary and sentence templates of the original tasks.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod tasks;

pub const TASK_NAMES: [&str; 20] = [
    "single-supporting-fact",
    "two-supporting-facts",
    "three-supporting-facts",
    "two-arg-relations",
    "three-arg-relations",
    "yes-no-questions",
    "counting",
    "lists-sets",
    "simple-negation",
    "indefinite-knowledge",
    "basic-coreference",
    "conjunction",
    "compound-coreference",
    "time-reasoning",
    "basic-deduction",
    "basic-induction",
    "positional-reasoning",
    "size-reasoning",
    "path-finding",
    "agents-motivations",
];

/// `qa1_single-supporting-fact_train.txt` style names.
pub fn file_name(task: usize, split: &str) -> String {
    format!("qa{}_{}_{}.txt", task, TASK_NAMES[task - 1], split)
}

/// One story under construction.
#[derive(Debug, Default)]
pub(crate) struct Story {
    lines: Vec<String>,
    questions: usize,
}

impl Story {
    fn next_id(&self) -> usize {
        self.lines.len() + 1
    }

    pub(crate) fn say(&mut self, text: impl AsRef<str>) -> usize {
        let id = self.next_id();
        self.lines.push(format!("{} {}", id, text.as_ref()));
        id
    }

    pub(crate) fn ask(
        &mut self,
        question: impl AsRef<str>,
        answer: impl AsRef<str>,
        support: &[usize],
    ) {
        let id = self.next_id();
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        let ids: Vec<String> = support.iter().map(|s| s.to_string()).collect();
        self.lines.push(format!(
            "{} {}\t{}\t{}",
            id,
            question.as_ref(),
            answer.as_ref(),
            ids.join(" ")
        ));
        self.questions += 1;
    }

    pub(crate) fn questions(&self) -> usize {
        self.questions
    }

    /// Drops lines after the `keep`-th question.
    fn truncate_questions(&mut self, keep: usize) {
        let mut seen = 0;
        let mut cut = self.lines.len();
        for (i, l) in self.lines.iter().enumerate() {
            if l.contains('\t') {
                seen += 1;
                if seen == keep {
                    cut = i + 1;
                    break;
                }
            }
        }
        self.lines.truncate(cut);
        self.questions = keep;
    }
}

/// Text of a task file holding exactly `questions` questions.
///
/// Panics if `task` is not in `1..=20`.
pub fn generate(task: usize, questions: usize, seed: u64) -> String {
    assert!(
        (1..=20).contains(&task),
        "task must be in 1..=20, got {task}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((task as u64) << 32));
    let mut out = String::new();
    let mut remaining = questions;
    while remaining > 0 {
        let mut story = tasks::story(task, &mut rng);
        if story.questions() == 0 {
            continue;
        }
        if story.questions() > remaining {
            story.truncate_questions(remaining);
        }
        remaining -= story.questions();
        for l in &story.lines {
            out.push_str(l);
            out.push('\n');
        }
    }
    out
}

/// Writes train and test files for every task into `dir`.
pub fn write_corpus(dir: &Path, train: usize, test: usize, seed: u64) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for task in 1..=20 {
        std::fs::write(
            dir.join(file_name(task, "train")),
            generate(task, train, seed),
        )?;
        std::fs::write(
            dir.join(file_name(task, "test")),
            generate(task, test, seed.wrapping_add(0x7e57)),
        )?;
    }
    Ok(())
}
