//! Word-to-phrase substitution used to turn single-word answer stories into
//! multi-word answer stories.

use super::CorpusError;

/// Built-in substitutions producing the multi-word answer corpus.
pub const DEFAULT_REPLACEMENTS: [(&str, &str); 12] = [
    ("hallway", "entrance way"),
    ("bathroom", "shower room"),
    ("office", "computer science office"),
    ("bedroom", "guest room"),
    ("milk", "hot water"),
    ("Bill", "Bill Gates"),
    ("Fred", "Fred Bush"),
    ("Mary", "Mary Bush"),
    ("green", "bright green"),
    ("yellow", "bright yellow"),
    ("hungry", "extremely hungry"),
    ("tired", "extremely tired"),
];

/// Ordered `(original word, replacement phrase)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplacementTable {
    entries: Vec<(String, String)>,
}

/// Result of applying a table to one text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replaced {
    pub text: String,
    /// Replacements made per table entry, in table order.
    pub counts: Vec<usize>,
}

impl Replaced {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn words(s: &str) -> Vec<&str> {
    s.split(|c: char| !is_word_char(c))
        .filter(|w| !w.is_empty())
        .collect()
}

impl Default for ReplacementTable {
    fn default() -> Self {
        Self::new(
            DEFAULT_REPLACEMENTS
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
        .expect("built-in table is valid")
    }
}

impl ReplacementTable {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, CorpusError> {
        let invalid = |m: String| Err(CorpusError::InvalidTable(m));
        if entries.is_empty() {
            return invalid("table has no entries".into());
        }
        for (i, (orig, repl)) in entries.iter().enumerate() {
            if words(orig) != [orig.as_str()] {
                return invalid(format!("original {orig:?} is not a single word"));
            }
            if words(repl).is_empty() {
                return invalid(format!("replacement for {orig:?} is empty"));
            }
            if entries[..i].iter().any(|(o, _)| o == orig) {
                return invalid(format!("original {orig:?} appears twice"));
            }
        }
        if !entries.iter().any(|(_, r)| words(r).len() > 1) {
            return invalid("no replacement phrase has more than one word".into());
        }
        Ok(Self { entries })
    }

    /// Reads `original<TAB>replacement phrase` lines; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (orig, repl) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                line: i + 1,
                message: "expected original<TAB>replacement".into(),
            })?;
            entries.push((orig.trim().to_string(), repl.trim().to_string()));
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `(i, j, word)` for each replacement phrase `i` that contains original
    /// `j != i` as a whole word. Empty for a table whose application is
    /// idempotent.
    pub fn cross_contained(&self) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        for (i, (_, repl)) in self.entries.iter().enumerate() {
            let repl_words = words(repl);
            for (j, (orig, _)) in self.entries.iter().enumerate() {
                if i != j && repl_words.contains(&orig.as_str()) {
                    out.push((i, j, orig.clone()));
                }
            }
        }
        out
    }

    /// Whole-word, case-sensitive replacement of every original.
    ///
    /// A span that already spells one of the replacement phrases is copied
    /// unchanged, so "Bill Gates" is not expanded a second time and applying
    /// the table to its own output is a no-op.
    pub fn apply(&self, text: &str) -> Replaced {
        let mut counts = vec![0; self.entries.len()];
        let mut out = String::with_capacity(text.len() + text.len() / 8);
        let mut rest = text;
        let mut prev_word_char = false;
        while let Some(c) = rest.chars().next() {
            if !is_word_char(c) || prev_word_char {
                out.push(c);
                prev_word_char = is_word_char(c);
                rest = &rest[c.len_utf8()..];
                continue;
            }
            // At the start of a word.
            if let Some(phrase) = self.phrase_at(rest) {
                out.push_str(phrase);
                rest = &rest[phrase.len()..];
                prev_word_char = true;
                continue;
            }
            let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
            let word = &rest[..end];
            match self.entries.iter().position(|(o, _)| o == word) {
                Some(k) => {
                    out.push_str(&self.entries[k].1);
                    counts[k] += 1;
                }
                None => out.push_str(word),
            }
            rest = &rest[end..];
            prev_word_char = true;
        }
        Replaced { text: out, counts }
    }

    /// A multi-word replacement phrase spelled at the start of `s`, ending on
    /// a word boundary.
    fn phrase_at<'a>(&'a self, s: &str) -> Option<&'a str> {
        self.entries
            .iter()
            .map(|(_, r)| r.as_str())
            .filter(|r| r.contains(|c: char| !is_word_char(c)))
            .find(|r| {
                s.starts_with(r) && s[r.len()..].chars().next().is_none_or(|c| !is_word_char(c))
            })
    }
}

/// Applies `table` to story text; see [`ReplacementTable::apply`].
pub fn apply_replacements(story_text: &str, table: &ReplacementTable) -> String {
    table.apply(story_text).text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_apply() {
        let t = ReplacementTable::default();
        assert_eq!(apply_replacements("bathroom", &t), "shower room");
        assert_eq!(apply_replacements("Bill", &t), "Bill Gates");
        assert_eq!(apply_replacements("Fred", &t), "Fred Bush");
        assert_eq!(
            apply_replacements(
                "1 Fred went to the office.\n2 Where is Fred?\toffice\t1\n",
                &t
            ),
            "1 Fred Bush went to the computer science office.\n\
             2 Where is Fred Bush?\tcomputer science office\t1\n"
        );
    }

    #[test]
    fn text_without_originals_is_unchanged() {
        let t = ReplacementTable::default();
        let s = "1 John went to the kitchen.\n2 Where is John?\tkitchen\t1\n";
        let r = t.apply(s);
        assert_eq!(r.text, s);
        assert_eq!(r.total(), 0);
    }

    #[test]
    fn whole_word_and_case_sensitive() {
        let t = ReplacementTable::default();
        assert_eq!(
            apply_replacements("Billy mary offices milk.", &t),
            "Billy mary offices hot water."
        );
    }

    #[test]
    fn no_phrase_contains_another_original() {
        assert!(ReplacementTable::default().cross_contained().is_empty());
    }

    #[test]
    fn second_application_is_fixed_point() {
        let t = ReplacementTable::default();
        let s = "1 Mary and Bill went to the bathroom.\n2 Fred is tired and hungry.\n\
                 3 The green box is in the office.\n4 Where is Mary?\tbathroom\t1\n";
        let once = apply_replacements(s, &t);
        assert_eq!(apply_replacements(&once, &t), once);
    }

    #[test]
    fn invalid_tables_are_rejected() {
        let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert!(ReplacementTable::new(vec![]).is_err());
        assert!(ReplacementTable::new(vec![pair("a", "b c"), pair("a", "d e")]).is_err());
        assert!(ReplacementTable::new(vec![pair("a", " ")]).is_err());
        assert!(ReplacementTable::new(vec![pair("a", "b")]).is_err());
        assert!(ReplacementTable::new(vec![pair("two words", "b c")]).is_err());
    }

    #[test]
    fn parses_tab_separated_file() {
        let t = ReplacementTable::parse("kitchen\tdining hall\ngarden\tback yard\n").unwrap();
        assert_eq!(t.entries().len(), 2);
        assert_eq!(apply_replacements("the kitchen", &t), "the dining hall");
        assert!(ReplacementTable::parse("kitchen dining hall\n").is_err());
    }
}
