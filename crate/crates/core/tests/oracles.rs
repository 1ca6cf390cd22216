//! Library results against independent brute-force reimplementations.

use ltmn::corpus::{load_instances, tokenize};
use ltmn::metrics::{ExampleScore, MetricsReport};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Line {
    Statement(Vec<&'static str>),
    Question(Vec<&'static str>, &'static str),
}

const WORDS: [&str; 8] = [
    "Mary", "John", "went", "to", "the", "garden", "office", "moved",
];

fn line() -> impl Strategy<Value = Line> {
    let words = prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..5);
    prop_oneof![
        3 => words.clone().prop_map(Line::Statement),
        1 => (words, prop::sample::select(vec!["garden", "office"])).prop_map(|(w, a)| Line::Question(w, a)),
    ]
}

fn render(stories: &[Vec<Line>]) -> String {
    let mut out = String::new();
    for story in stories {
        for (i, l) in story.iter().enumerate() {
            match l {
                Line::Statement(w) => out.push_str(&format!("{} {}.\n", i + 1, w.join(" "))),
                Line::Question(w, a) => out.push_str(&format!("{} {}?\t{a}\n", i + 1, w.join(" "))),
            }
        }
    }
    out
}

/// Walks the raw text: every question's context is every earlier statement
/// line since the last index reset.
fn context_oracle(text: &str) -> Vec<(Vec<Vec<String>>, Vec<String>)> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<String>> = Vec::new();
    let mut last_index = 0usize;
    for raw in text.lines() {
        let (num, rest) = raw.split_once(' ').unwrap();
        let index: usize = num.parse().unwrap();
        if index <= last_index {
            current.clear();
        }
        last_index = index;
        match rest.split_once('\t') {
            Some((q, a)) => out.push((current.clone(), vec![q.to_string(), a.to_string()])),
            None => current.push(tokenize(rest)),
        }
    }
    out
}

proptest! {
    #[test]
    fn parsed_contexts_match_the_line_walk(
        stories in prop::collection::vec(
            prop::collection::vec(line(), 1..8)
                .prop_filter("story opens with a statement", |s| matches!(s[0], Line::Statement(_))),
            1..5,
        )
    ) {
        let text = render(&stories);
        let parsed = load_instances(&text).unwrap();
        let oracle = context_oracle(&text);
        prop_assert_eq!(parsed.len(), oracle.len());
        for (inst, (ctx, qa)) in parsed.iter().zip(&oracle) {
            prop_assert_eq!(&inst.context, ctx);
            prop_assert_eq!(&inst.question, &tokenize(&qa[0]));
            prop_assert_eq!(&inst.answer, &vec![qa[1].to_lowercase()]);
        }
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn naive_exact(p: &[String], g: &[String]) -> f64 {
    if p.len() != g.len() {
        return 0.0;
    }
    for i in 0..p.len() {
        if p[i].to_lowercase() != g[i].to_lowercase() {
            return 0.0;
        }
    }
    1.0
}

fn naive_partial(p: &[String], g: &[String]) -> f64 {
    for a in p {
        for b in g {
            if a.to_lowercase() == b.to_lowercase() {
                return 1.0;
            }
        }
    }
    0.0
}

/// Clipped n-gram matches by marking each reference n-gram at most once.
fn naive_matches(p: &[String], g: &[String], n: usize) -> usize {
    let mut used = vec![false; g.len() + 1 - n];
    let mut matched = 0;
    for i in 0..=p.len() - n {
        for j in 0..used.len() {
            if !used[j] && (0..n).all(|k| p[i + k] == g[j + k]) {
                used[j] = true;
                matched += 1;
                break;
            }
        }
    }
    matched
}

fn naive_bleu(p: &[String], g: &[String]) -> f64 {
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let p: Vec<String> = p.iter().map(|s| s.to_lowercase()).collect();
    let g: Vec<String> = g.iter().map(|s| s.to_lowercase()).collect();
    let big_n = [4, p.len(), g.len()].into_iter().min().unwrap();
    let mut product = 1.0;
    for n in 1..=big_n {
        let m = naive_matches(&p, &g, n) as f64;
        let total = (p.len() + 1 - n) as f64;
        let precision = if n == 1 {
            m / total
        } else {
            (m + 1.0) / (total + 1.0)
        };
        product *= precision;
    }
    let bp = if p.len() < g.len() {
        (1.0 - g.len() as f64 / p.len() as f64).exp()
    } else {
        1.0
    };
    bp * product.powf(1.0 / big_n as f64)
}

/// 200 examples in four blocks of 50: exact, one shared word plus noise,
/// disjoint, and empty predictions.
fn fixture() -> Vec<(Vec<String>, Vec<String>)> {
    let golds = [
        "shower room",
        "garden",
        "bill gates",
        "the living room",
        "kitchen",
        "a b c d e",
    ];
    (0..200)
        .map(|i| {
            let gold = words(golds[i % golds.len()]);
            let pred = match i / 50 {
                0 => gold.clone(),
                1 => {
                    let mut p = vec![gold[0].clone(), "zebra".to_string()];
                    if i % 3 == 0 {
                        p.reverse();
                    }
                    p
                }
                2 => words("nowhere at all"),
                _ => Vec::new(),
            };
            (pred, gold)
        })
        .collect()
}

#[test]
fn metrics_match_brute_force_on_200_examples() {
    let rows = fixture();
    let details: Vec<ExampleScore> = rows
        .iter()
        .map(|(p, g)| ExampleScore::new(vec!["q".into()], g.clone(), p.clone()))
        .collect();
    let report = MetricsReport::from_details(details);

    let n = rows.len() as f64;
    let ema = rows.iter().map(|(p, g)| naive_exact(p, g)).sum::<f64>() / n;
    let pma = rows.iter().map(|(p, g)| naive_partial(p, g)).sum::<f64>() / n;
    let bleu = rows.iter().map(|(p, g)| naive_bleu(p, g)).sum::<f64>() / n;

    assert_eq!(report.n_examples, 200);
    assert_eq!(report.ema, ema);
    assert_eq!(report.pma, pma);
    assert!(
        (report.bleu - bleu).abs() <= 1e-9,
        "{} vs {bleu}",
        report.bleu
    );
    assert_eq!(ema, 0.25);
    assert_eq!(pma, 0.5);
    assert!(report.ema <= report.pma);

    for (d, (p, g)) in report.details.iter().zip(&rows) {
        assert_eq!(d.em, naive_exact(p, g));
        assert_eq!(d.pm, naive_partial(p, g));
        assert!((d.bleu - naive_bleu(p, g)).abs() <= 1e-9);
    }
}

proptest! {
    #[test]
    fn bleu_matches_brute_force(
        p in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "room"]), 0..7),
        g in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "room"]), 1..7),
    ) {
        let p: Vec<String> = p.into_iter().map(String::from).collect();
        let g: Vec<String> = g.into_iter().map(String::from).collect();
        let got = ltmn::metrics::bleu(&p, &g);
        prop_assert!((got - naive_bleu(&p, &g)).abs() <= 1e-9);
    }
}
