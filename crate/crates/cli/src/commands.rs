use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use log::{info, warn};
use ltmn::corpus::{
    load_instances, parse_babi, split_train_validation, tokenize, QaInstance, ReplacementTable,
};
use ltmn::gradcheck::{fixture_config, run_fixture_check};
use ltmn::training::{build_vocabulary, init_parameters, train_from};
use ltmn::{encode_instance, evaluate, predict, save_checkpoint, Checkpoint, Vocabulary};

use crate::args::{AnswerArgs, EvalArgs, GenerateArgs, GradcheckArgs, TrainArgs};
use crate::Failure;

/// Share of unknown test tokens above which evaluation refuses to run.
const MAX_UNKNOWN_FRACTION: f64 = 0.2;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_instances(path: &Path) -> Result<Vec<QaInstance>, Failure> {
    let text = read(path)?;
    load_instances(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn generate_multiword(args: &GenerateArgs) -> Result<(), Failure> {
    let table = match &args.table {
        Some(p) => ReplacementTable::parse(&read(p)?)
            .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => ReplacementTable::default(),
    };
    for (i, j, _) in table.cross_contained() {
        warn!(
            "replacement {:?} appears inside the phrase for {:?}",
            table.entries()[i].0,
            table.entries()[j].0
        );
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&args.in_dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.in_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        warn!("{}: no .txt story files found", args.in_dir.display());
        return Ok(());
    }
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.out_dir.display())))?;

    let mut failed = 0;
    for path in &files {
        let name = path.file_name().expect("read_dir entries have names");
        let outcome = read(path).and_then(|text| {
            parse_babi(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            let replaced = table.apply(&text);
            write(&args.out_dir.join(name), &replaced.text)?;
            Ok(replaced)
        });
        match outcome {
            Ok(r) => {
                let per_entry: Vec<String> = table
                    .entries()
                    .iter()
                    .zip(&r.counts)
                    .filter(|(_, &c)| c > 0)
                    .map(|((w, _), c)| format!("{w}={c}"))
                    .collect();
                println!(
                    "{}\t{} replacements\t{}",
                    name.to_string_lossy(),
                    r.total(),
                    per_entry.join(" ")
                );
            }
            Err(f) => {
                eprintln!("error: {}", f.message());
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Data(format!(
            "{failed} of {} files could not be converted",
            files.len()
        )));
    }
    Ok(())
}

pub fn train(args: &TrainArgs, matches: &ArgMatches) -> Result<(), Failure> {
    let config = args.model.resolve(matches)?;
    println!("# resolved configuration");
    print!("{}", config.describe());

    let dataset = read_instances(&args.train)?;
    if dataset.len() < 2 {
        return Err(Failure::Data(format!(
            "{}: need at least 2 questions to hold out a validation set, found {}",
            args.train.display(),
            dataset.len()
        )));
    }
    let vocab = build_vocabulary(&dataset, &config);
    let (train_set, val_set) =
        split_train_validation(dataset, config.validation_fraction, config.seed)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    info!(
        "{} training and {} validation questions, vocabulary of {}",
        train_set.len(),
        val_set.len(),
        vocab.len()
    );
    let params = init_parameters(&config, &vocab)?;

    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".log"));
    let mut log_file = fs::File::create(&log_path)
        .map_err(|e| Failure::Data(format!("{}: {e}", log_path.display())))?;
    let mut log_error = None;
    let (params, best_epoch, best_val_ema, _) =
        train_from(params, &vocab, &train_set, &val_set, &config, |entry| {
            info!(
                "epoch {:>4}  loss {:.6}  val EMA {:.4}",
                entry.epoch, entry.train_loss, entry.val_ema
            );
            if log_error.is_none() {
                if let Err(e) = writeln!(log_file, "{}", entry.to_line()) {
                    log_error = Some(e);
                }
            }
        })?;
    if let Some(e) = log_error {
        return Err(Failure::Data(format!("{}: {e}", log_path.display())));
    }

    let checkpoint = Checkpoint {
        config,
        vocab,
        params,
        epoch: best_epoch,
        val_ema: best_val_ema,
    };
    save_checkpoint(&args.out, &checkpoint)?;
    println!(
        "best epoch {best_epoch}  validation EMA {best_val_ema:.4} ({:.1}%)",
        100.0 * best_val_ema
    );
    println!("checkpoint written to {}", args.out.display());
    println!("epoch log written to {}", log_path.display());
    Ok(())
}

/// Fraction of context and question tokens the vocabulary does not know.
fn unknown_fraction(dataset: &[QaInstance], vocab: &Vocabulary) -> (usize, usize) {
    let mut unknown = 0;
    let mut total = 0;
    for inst in dataset {
        for tok in inst.context.iter().flatten().chain(&inst.question) {
            total += 1;
            if !vocab.contains(tok) {
                unknown += 1;
            }
        }
    }
    (unknown, total)
}

pub fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let checkpoint = ltmn::load_checkpoint(&args.checkpoint)?;
    let dataset = read_instances(&args.test)?;
    let (unknown, total) = unknown_fraction(&dataset, &checkpoint.vocab);
    if total > 0 && unknown > 0 {
        let frac = unknown as f64 / total as f64;
        if frac > MAX_UNKNOWN_FRACTION {
            return Err(Failure::Data(format!(
                "{}: {unknown} of {total} tokens ({:.1}%) are unknown to the checkpoint vocabulary; \
                 was it trained on a different task?",
                args.test.display(),
                100.0 * frac
            )));
        }
        warn!("{unknown} of {total} test tokens are unknown and map to <UNK>");
    }
    let config = &checkpoint.config;
    let report = evaluate(
        &checkpoint.params,
        &checkpoint.vocab,
        &dataset,
        config.hops,
        config.max_len,
    )?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| with_suffix(&args.checkpoint, ".eval.tsv"));
    write(&report_path, &report.to_tsv())?;
    println!("{}", report.summary());
    println!("report written to {}", report_path.display());
    Ok(())
}

/// Story lines with any leading line number removed.
fn story_sentences(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let rest = l.trim_start_matches(|c: char| c.is_ascii_digit());
            if rest.len() < l.len() && rest.starts_with(char::is_whitespace) {
                rest.trim_start().to_string()
            } else {
                l.to_string()
            }
        })
        .collect()
}

pub fn answer(args: &AnswerArgs) -> Result<(), Failure> {
    let checkpoint = ltmn::load_checkpoint(&args.checkpoint)?;
    let sentences = match &args.story {
        Some(p) => story_sentences(&read(p)?),
        None => args.sentence.clone(),
    };
    if sentences.is_empty() {
        return Err(Failure::Usage(
            "the story is empty; give --story FILE or at least one --sentence".into(),
        ));
    }
    let inst = QaInstance {
        context: sentences.iter().map(|s| tokenize(s)).collect(),
        question: tokenize(&args.question),
        answer: Vec::new(),
        supporting_ids: None,
        story_id: 0,
        line_no: sentences.len() + 1,
    };
    let vocab = &checkpoint.vocab;
    let (unknown, _) = unknown_fraction(std::slice::from_ref(&inst), vocab);
    if unknown > 0 {
        warn!("{unknown} story or question tokens are unknown and map to <UNK>");
    }
    let enc = encode_instance(&inst, vocab)?;
    let config = &checkpoint.config;
    let pred = predict(
        &checkpoint.params,
        &enc,
        config.hops,
        config.max_len,
        vocab.eos(),
    )?;
    let words: Vec<&str> = pred
        .words
        .iter()
        .map(|&w| vocab.token(w).unwrap_or(ltmn::corpus::UNK))
        .collect();
    println!("{}", words.join(" "));
    if args.verbose {
        for (i, (s, p)) in sentences.iter().zip(&pred.attention).enumerate() {
            println!("{:>3}  {p:.4}  {s}", i + 1);
        }
        println!("attention sum {:.6}", pred.attention.iter().sum::<f64>());
    }
    Ok(())
}

pub fn gradcheck(args: &GradcheckArgs) -> Result<(), Failure> {
    if args.epsilon > 1e-2 {
        warn!(
            "epsilon {} is large; truncation error may exceed the tolerance",
            args.epsilon
        );
    }
    let config = fixture_config(&args.to_config());
    let config = ltmn::training::TrainingConfig {
        d: args.dim,
        hidden: args.hidden.0,
        ..config
    };
    let report = run_fixture_check(
        &config,
        args.epsilon,
        args.tolerance,
        args.inject_gradient_error,
    )?;
    println!(
        "epsilon {}  tolerance {}  d {}  hidden {}  hops {}",
        args.epsilon,
        args.tolerance,
        config.d,
        config.hidden(),
        config.hops
    );
    for g in &report.groups {
        let verdict = if g.max_rel_error <= args.tolerance {
            "ok"
        } else {
            "FAIL"
        };
        println!(
            "{:<10} {:>6} entries  max rel error {:.3e}  {verdict}",
            g.name, g.entries, g.max_rel_error
        );
    }
    if report.passed() {
        println!("PASS  max rel error {:.3e}", report.max_rel_error());
        Ok(())
    } else {
        println!("FAIL  max rel error {:.3e}", report.max_rel_error());
        Err(Failure::Numeric(format!(
            "gradient check failed: max relative error {:.3e} exceeds {}",
            report.max_rel_error(),
            args.tolerance
        )))
    }
}
