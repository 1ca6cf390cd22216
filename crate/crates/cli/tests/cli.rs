use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ltmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltmn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Trains a tiny model on synthetic task 1 and returns its checkpoint path.
fn tiny_model(dir: &Path) -> std::path::PathBuf {
    let train = dir.join("train.txt");
    fs::write(&train, babi_synth::generate(1, 60, 4)).unwrap();
    let out = dir.join("m.ckpt");
    let o = ltmn(&[
        "train",
        "--train",
        p(&train),
        "--out",
        p(&out),
        "--epochs",
        "2",
        "--dim",
        "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn help_and_version_exit_zero() {
    let o = ltmn(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["generate-multiword", "train", "eval", "answer", "gradcheck"] {
        assert!(stdout(&o).contains(sub), "{sub} missing from help");
    }
    assert_eq!(ltmn(&["--version"]).status.code(), Some(0));
    let o = ltmn(&["train", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[default: 0.002]"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ltmn(&[]).status.code(), Some(1));
    assert_eq!(ltmn(&["train"]).status.code(), Some(1));
    assert_eq!(ltmn(&["frobnicate"]).status.code(), Some(1));
    let o = ltmn(&[
        "train",
        "--train",
        "x",
        "--out",
        "y",
        "--validation-fraction",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = ltmn(&["train", "--train", "x", "--out", "y", "--hidden", "wide"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_or_malformed_data_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltmn(&[
        "train",
        "--train",
        "/nonexistent/file",
        "--out",
        p(&dir.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "x Mary went home.\n").unwrap();
    let o = ltmn(&[
        "train",
        "--train",
        p(&bad),
        "--out",
        p(&dir.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    let garbage = dir.path().join("garbage.ckpt");
    fs::write(&garbage, b"not a checkpoint").unwrap();
    let o = ltmn(&["eval", "--checkpoint", p(&garbage), "--test", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_echoes_config_and_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "# overrides\nepochs = 9\nlearning_rate = 0.01\n").unwrap();
    let train = dir.path().join("train.txt");
    fs::write(&train, babi_synth::generate(1, 40, 1)).unwrap();
    let out = dir.path().join("m.ckpt");
    let o = ltmn(&[
        "train",
        "--train",
        p(&train),
        "--out",
        p(&out),
        "--config",
        p(&config),
        "--epochs",
        "2",
        "--dim",
        "8",
        "--tie-a-b",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("epochs = 2"), "{text}");
    assert!(text.contains("learning_rate = 0.01"), "{text}");
    assert!(text.contains("tie_a_b = true"), "{text}");
    assert!(text.contains("optimizer = adam"), "{text}");
    let log = fs::read_to_string(dir.path().join("m.ckpt.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2);
    for (i, l) in lines.iter().enumerate() {
        let f: Vec<&str> = l.split('\t').collect();
        assert_eq!(f.len(), 3);
        assert_eq!(f[0], (i + 1).to_string());
        assert!(f[1].parse::<f64>().unwrap().is_finite());
        assert!((0.0..=1.0).contains(&f[2].parse::<f64>().unwrap()));
    }
}

#[test]
fn eval_writes_report_and_prints_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path());
    let test = dir.path().join("test.txt");
    fs::write(&test, babi_synth::generate(1, 30, 99)).unwrap();
    let o = ltmn(&["eval", "--checkpoint", p(&ckpt), "--test", p(&test)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("EMA") && text.contains("PMA") && text.contains("BLEU"));
    assert!(text.contains("%)"));
    let report = fs::read_to_string(dir.path().join("m.ckpt.eval.tsv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 30 + 1);
    assert!(report.lines().last().unwrap().starts_with("summary\tn=30"));
}

#[test]
fn eval_refuses_a_foreign_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path());
    let test = dir.path().join("other.txt");
    fs::write(&test, babi_synth::generate(15, 30, 1)).unwrap();
    let o = ltmn(&["eval", "--checkpoint", p(&ckpt), "--test", p(&test)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown"), "{}", stderr(&o));
}

#[test]
fn answer_prints_words_and_attention() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path());
    let o = ltmn(&[
        "answer",
        "--checkpoint",
        p(&ckpt),
        "--sentence",
        "Mary went to the kitchen.",
        "--sentence",
        "John moved to the garden.",
        "--question",
        "Where is Mary?",
        "--verbose",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    let sum: f64 = lines[3].rsplit(' ').next().unwrap().parse().unwrap();
    assert!((sum - 1.0).abs() < 1e-6);

    let story = dir.path().join("story.txt");
    fs::write(
        &story,
        "1 Mary went to the kitchen.\n2 John moved to the garden.\n",
    )
    .unwrap();
    let o = ltmn(&[
        "answer",
        "--checkpoint",
        p(&ckpt),
        "--story",
        p(&story),
        "--question",
        "Where is John?",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);

    let o = ltmn(&[
        "answer",
        "--checkpoint",
        p(&ckpt),
        "--question",
        "Where is John?",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_passes_and_detects_injected_error() {
    let o = ltmn(&["gradcheck"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = ltmn(&["gradcheck", "--inject-gradient-error"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
    let o = ltmn(&["gradcheck", "--epsilon", "0.05", "--tolerance", "1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("large"), "{}", stderr(&o));
}

#[test]
fn generate_multiword_converts_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let output = dir.path().join("out");
    fs::create_dir(&input).unwrap();
    fs::write(
        input.join("a.txt"),
        "1 Mary went to the bathroom.\n2 Where is Mary?\tbathroom\t1\n",
    )
    .unwrap();
    fs::write(input.join("notes.md"), "ignored").unwrap();
    let o = ltmn(&[
        "generate-multiword",
        "--in-dir",
        p(&input),
        "--out-dir",
        p(&output),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("a.txt\t4 replacements"),
        "{}",
        stdout(&o)
    );
    let text = fs::read_to_string(output.join("a.txt")).unwrap();
    assert!(text.contains("shower room.\n") && text.contains("\tshower room\t1"));
    assert!(!output.join("notes.md").exists());

    fs::write(input.join("b.txt"), "oops\n").unwrap();
    let o = ltmn(&[
        "generate-multiword",
        "--in-dir",
        p(&input),
        "--out-dir",
        p(&output),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = ltmn(&[
        "generate-multiword",
        "--in-dir",
        p(&empty),
        "--out-dir",
        p(&output),
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no .txt"), "{}", stderr(&o));
}

#[test]
fn custom_table_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    fs::write(
        input.join("a.txt"),
        "1 Mary went home.\n2 Where is Mary?\thome\t1\n",
    )
    .unwrap();
    let table = dir.path().join("table.tsv");
    fs::write(&table, "home\tsweet home\n").unwrap();
    let output = dir.path().join("out");
    let o = ltmn(&[
        "generate-multiword",
        "--in-dir",
        p(&input),
        "--out-dir",
        p(&output),
        "--table",
        p(&table),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(output.join("a.txt")).unwrap();
    assert!(text.contains("\tsweet home\t1"), "{text}");
}
