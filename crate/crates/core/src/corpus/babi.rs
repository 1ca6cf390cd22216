//! Story-format reader and writer.
//!
//! Each line is `<n> <sentence>` or `<n> <question>\t<answer>[\t<ids>]`.
//! A line number of 1, or one not greater than its predecessor, opens a new
//! story.

use std::fmt::Write as _;

use super::{tokenize, tokenize_answer, CorpusError, QaInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StoryLine {
    Statement {
        id: usize,
        tokens: Vec<String>,
    },
    Question {
        id: usize,
        tokens: Vec<String>,
        answer: Vec<String>,
        supporting: Vec<usize>,
    },
}

impl StoryLine {
    pub fn id(&self) -> usize {
        match self {
            StoryLine::Statement { id, .. } | StoryLine::Question { id, .. } => *id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Story {
    /// Zero-based position of the story in its file.
    pub index: usize,
    pub lines: Vec<StoryLine>,
}

impl Story {
    /// One instance per question, holding every statement that precedes it
    /// in this story.
    pub fn instances(&self) -> Result<Vec<QaInstance>, CorpusError> {
        let mut context: Vec<Vec<String>> = Vec::new();
        let mut out = Vec::new();
        for line in &self.lines {
            match line {
                StoryLine::Statement { tokens, .. } => context.push(tokens.clone()),
                StoryLine::Question {
                    id,
                    tokens,
                    answer,
                    supporting,
                } => {
                    if context.is_empty() {
                        return Err(CorpusError::EmptyContext {
                            story: self.index,
                            line_no: *id,
                        });
                    }
                    out.push(QaInstance {
                        context: context.clone(),
                        question: tokens.clone(),
                        answer: answer.clone(),
                        supporting_ids: (!supporting.is_empty()).then(|| supporting.clone()),
                        story_id: self.index,
                        line_no: *id,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn question_count(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| matches!(l, StoryLine::Question { .. }))
            .count()
    }
}

/// Parses story-format text. Errors carry the 1-based physical line.
pub fn parse_babi(text: &str) -> Result<Vec<Story>, CorpusError> {
    let mut stories: Vec<Story> = Vec::new();
    let mut prev_id = 0usize;
    for (offset, raw) in text.lines().enumerate() {
        let line_no = offset + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse {
            line: line_no,
            message,
        };
        let trimmed = raw.trim_start();
        let (number, rest) = trimmed
            .split_once(|c: char| c.is_whitespace())
            .unwrap_or((trimmed, ""));
        let id: usize = number.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            parse_err(format!("expected a positive line number, found {number:?}"))
        })?;

        if id == 1 || id <= prev_id || stories.is_empty() {
            stories.push(Story {
                index: stories.len(),
                lines: Vec::new(),
            });
        }
        prev_id = id;

        let mut fields = rest.split('\t');
        let text_field = fields.next().unwrap_or("");
        let story_line = match fields.next() {
            None => {
                if text_field.contains('?') {
                    return Err(parse_err(
                        "question line has no tab-separated answer".into(),
                    ));
                }
                let tokens = tokenize(text_field);
                if tokens.is_empty() {
                    return Err(parse_err("empty statement".into()));
                }
                StoryLine::Statement { id, tokens }
            }
            Some(answer_field) => {
                let answer = tokenize_answer(answer_field);
                if answer.is_empty() {
                    return Err(parse_err("question has an empty answer field".into()));
                }
                let mut supporting = Vec::new();
                if let Some(ids) = fields.next() {
                    for tok in ids.split(|c: char| c == ',' || c.is_whitespace()) {
                        if tok.is_empty() {
                            continue;
                        }
                        let sid: usize = tok.parse().map_err(|_| {
                            parse_err(format!("supporting fact id {tok:?} is not a number"))
                        })?;
                        if sid == 0 || sid >= id {
                            return Err(parse_err(format!(
                                "supporting fact {sid} does not precede question line {id}"
                            )));
                        }
                        supporting.push(sid);
                    }
                }
                StoryLine::Question {
                    id,
                    tokens: tokenize(text_field),
                    answer,
                    supporting,
                }
            }
        };
        stories
            .last_mut()
            .expect("a story is open")
            .lines
            .push(story_line);
    }
    Ok(stories)
}

/// Flattens stories into instances, rejecting questions with no context.
pub fn instances_from_stories(stories: &[Story]) -> Result<Vec<QaInstance>, CorpusError> {
    let mut out = Vec::new();
    for s in stories {
        out.extend(s.instances()?);
    }
    Ok(out)
}

/// Parses text and flattens it into instances.
pub fn load_instances(text: &str) -> Result<Vec<QaInstance>, CorpusError> {
    instances_from_stories(&parse_babi(text)?)
}

/// Writes stories back in story format from their tokens.
pub fn serialize_babi(stories: &[Story]) -> String {
    let mut out = String::new();
    for story in stories {
        for line in &story.lines {
            match line {
                StoryLine::Statement { id, tokens } => {
                    let _ = writeln!(out, "{id} {}", tokens.join(" "));
                }
                StoryLine::Question {
                    id,
                    tokens,
                    answer,
                    supporting,
                } => {
                    let _ = write!(out, "{id} {}\t{}", tokens.join(" "), answer.join(" "));
                    if !supporting.is_empty() {
                        let ids: Vec<String> = supporting.iter().map(usize::to_string).collect();
                        let _ = write!(out, "\t{}", ids.join(" "));
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_question_trace() {
        let text = "1 Mary moved to the shower room.\n2 Where is Mary?\tshower room\t1";
        let inst = load_instances(text).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].context.len(), 1);
        assert_eq!(
            inst[0].context[0],
            ["mary", "moved", "to", "the", "shower", "room", "."]
        );
        assert_eq!(inst[0].question, ["where", "is", "mary", "?"]);
        assert_eq!(inst[0].answer, ["shower", "room"]);
        assert_eq!(inst[0].supporting_ids, Some(vec![1]));
    }

    #[test]
    fn index_reset_starts_new_story() {
        let text = "1 John went to the garden.\n2 Where is John?\tgarden\t1\n\
                    1 Sandra went to the kitchen.\n2 Where is Sandra?\tkitchen\t1\n";
        let stories = parse_babi(text).unwrap();
        assert_eq!(stories.len(), 2);
        let inst = instances_from_stories(&stories).unwrap();
        assert_eq!(
            inst[1].context,
            vec![tokenize("Sandra went to the kitchen.")]
        );
        assert_eq!(inst[1].story_id, 1);
    }

    #[test]
    fn statements_after_question_extend_context() {
        // Statements interleaved with questions, as in the layout where
        // later facts follow an earlier question in the same story.
        let text = "1 Raskin was the leader.\n2 Jobs took over.\n3 Raskin left.\n\
                    4 Why did Raskin leave?\tjobs took over\t2 3\n\
                    5 Hertzfeld agreed.\n6 Jobs designed it.\n\
                    7 Whose idea is the final design?\tjobs\t6\n";
        let inst = load_instances(text).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[0].context.len(), 3);
        assert_eq!(inst[1].context.len(), 5);
        assert_eq!(inst[0].answer, ["jobs", "took", "over"]);
        assert_eq!(inst[0].supporting_ids, Some(vec![2, 3]));
    }

    #[test]
    fn comma_answers_split_into_tokens() {
        let text = "1 Mary got the milk.\n2 What is Mary carrying?\tmilk,football\t1\n";
        let inst = load_instances(text).unwrap();
        assert_eq!(inst[0].answer, ["milk", "football"]);
    }

    #[test]
    fn bad_prefix_reports_line() {
        let err = parse_babi("1 ok.\nfoo bar.\n").unwrap_err();
        assert_eq!(
            err,
            CorpusError::Parse {
                line: 2,
                message: "expected a positive line number, found \"foo\"".into()
            }
        );
    }

    #[test]
    fn empty_answer_is_rejected() {
        let err = parse_babi("1 Mary ran.\n2 Where is Mary?\t\t1\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn question_without_context_is_rejected() {
        let err = load_instances("1 Where is Mary?\tkitchen\n").unwrap_err();
        assert!(matches!(err, CorpusError::EmptyContext { .. }));
    }

    #[test]
    fn supporting_fact_must_precede_question() {
        let err = parse_babi("1 Mary ran.\n2 Where is Mary?\tkitchen\t2\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn serialize_then_parse_is_token_identical() {
        let text = "1 Mary moved to the shower room.\n2 John went to the hallway.\n\
                    3 Where is Mary? \tshower room\t1\n4 Mary took the milk there.\n\
                    5 What is Mary carrying?\tmilk\t4\n1 Bill is tired.\n2 Why?\ttired\t1\n";
        let stories = parse_babi(text).unwrap();
        let again = parse_babi(&serialize_babi(&stories)).unwrap();
        assert_eq!(stories, again);
    }
}
