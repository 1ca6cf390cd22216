use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::QaInstance;

pub const PAD: &str = "<PAD>";
pub const EOS: &str = "<EOS>";
pub const BOA: &str = "<BOA>";
pub const UNK: &str = "<UNK>";

/// Reserved tokens, in index order.
pub const RESERVED: [&str; 4] = [PAD, EOS, BOA, UNK];

pub fn time_token(age: usize) -> String {
    format!("<T{age}>")
}

/// Bijection between tokens and dense indices `0..len`.
///
/// The four reserved tokens always occupy indices 0 to 3. Unknown tokens
/// encode to `<UNK>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    time_slots: usize,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// Vocabulary holding only the reserved tokens.
    pub fn new() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
            time_slots: 0,
        };
        for t in RESERVED {
            v.insert(t);
        }
        v
    }

    /// Every context, question and answer token in first-occurrence order,
    /// after the reserved tokens.
    pub fn build(instances: &[QaInstance]) -> Self {
        let mut v = Self::new();
        for inst in instances {
            for tok in inst.tokens() {
                v.insert(tok);
            }
        }
        v
    }

    /// Adds `token` if absent and returns its index.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        if token == time_token(self.time_slots + 1) {
            self.time_slots += 1;
        }
        i
    }

    /// Adds the recency tokens `<T1>..<Tn>`.
    pub fn add_time_tokens(&mut self, n: usize) {
        for k in 1..=n {
            self.insert(&time_token(k));
        }
    }

    /// Number of consecutive recency tokens `<T1>..` present.
    pub fn time_slots(&self) -> usize {
        self.time_slots
    }

    /// Recency token of the sentence `age` places before the question
    /// (1 = most recent); ages beyond the last slot share it.
    pub fn time_index(&self, age: usize) -> Option<usize> {
        if self.time_slots == 0 {
            return None;
        }
        self.get(&time_token(age.clamp(1, self.time_slots)))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Index of `token`, or of `<UNK>` when absent.
    pub fn encode(&self, token: &str) -> usize {
        self.get(token).unwrap_or_else(|| self.unk())
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pad(&self) -> usize {
        0
    }

    pub fn eos(&self) -> usize {
        1
    }

    pub fn boa(&self) -> usize {
        2
    }

    pub fn unk(&self) -> usize {
        3
    }

    pub fn is_reserved(&self, index: usize) -> bool {
        index < RESERVED.len()
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(t, r)| t != r) {
            return Err("vocabulary must start with the reserved tokens".into());
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(format!("duplicate vocabulary token {t:?}"));
            }
        }
        let time_slots = (1..)
            .take_while(|&k| index.contains_key(&time_token(k)))
            .count();
        Ok(Self {
            tokens,
            index,
            time_slots,
        })
    }
}
