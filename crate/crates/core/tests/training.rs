use std::collections::HashSet;

use ltmn::corpus::{load_instances, split_train_validation, QaInstance};
use ltmn::params::Param;
use ltmn::training::{
    batch_gradient, build_vocabulary, init_parameters, loss_value, sgd_step, train, Optimizer,
    TrainingConfig,
};
use ltmn::{encode_instance, evaluate, load_checkpoint, predict, save_checkpoint, Checkpoint};

const TWO_STORIES: &str = "1 Mary went to the shower room.\n2 John went to the garden.\n\
                           3 Where is Mary?\tshower room\t1\n\
                           1 Bill journeyed to the guest room.\n2 Fred moved to the kitchen.\n\
                           3 Where is Bill?\tguest room\t1\n";

fn tiny(seed: u64) -> TrainingConfig {
    TrainingConfig {
        d: 8,
        hidden: Some(8),
        batch_size: 2,
        seed,
        ..TrainingConfig::default()
    }
}

fn dummy_corpus(n: usize) -> Vec<QaInstance> {
    let mut text = String::new();
    for i in 0..n {
        let place = ["garden", "kitchen", "office"][i % 3];
        text.push_str(&format!(
            "1 Mary went to the {place}.\n2 John moved to the hallway.\n3 Where is Mary?\t{place}\t1\n"
        ));
    }
    load_instances(&text).unwrap()
}

#[test]
fn small_sgd_step_decreases_batch_loss_for_most_seeds() {
    let inst = load_instances(TWO_STORIES).unwrap();
    let mut decreased = 0;
    let seeds = 100;
    for seed in 0..seeds {
        let config = TrainingConfig {
            learning_rate: 1e-3,
            ..tiny(seed)
        };
        let vocab = build_vocabulary(&inst, &config);
        let enc: Vec<_> = inst
            .iter()
            .map(|i| encode_instance(i, &vocab).unwrap())
            .collect();
        let batch: Vec<_> = enc.iter().collect();
        let mut params = init_parameters(&config, &vocab).unwrap();
        let (before, grads) = batch_gradient(&params, &batch, &config, vocab.eos()).unwrap();
        sgd_step(&mut params, &grads, config.learning_rate);
        let (after, _) = batch_gradient(&params, &batch, &config, vocab.eos()).unwrap();
        if after < before {
            decreased += 1;
        }
    }
    assert!(
        decreased >= 95,
        "loss decreased for {decreased} of {seeds} seeds"
    );
}

#[test]
fn memorises_two_examples() {
    let inst = load_instances(TWO_STORIES).unwrap();
    let config = TrainingConfig {
        epochs: 150,
        learning_rate: 0.02,
        validation_fraction: 0.5,
        ..tiny(3)
    };
    // Train on both examples: the split only chooses which one validates.
    let vocab = build_vocabulary(&inst, &config);
    let (params, ..) = ltmn::training::train_from(
        init_parameters(&config, &vocab).unwrap(),
        &vocab,
        &inst,
        &inst,
        &config,
        |_| {},
    )
    .unwrap();
    let mut total = 0.0;
    for i in &inst {
        let enc = encode_instance(i, &vocab).unwrap();
        total += loss_value(&params, &enc, &config, vocab.eos()).unwrap();
        let pred = predict(&params, &enc, config.hops, config.max_len, vocab.eos()).unwrap();
        let words: Vec<&str> = pred
            .words
            .iter()
            .map(|&w| vocab.token(w).unwrap())
            .collect();
        assert_eq!(
            words,
            i.answer.iter().map(String::as_str).collect::<Vec<_>>()
        );
    }
    assert!(total / 2.0 < 0.05, "mean loss {}", total / 2.0);
}

#[test]
fn plain_sgd_runs_and_logs_every_epoch() {
    let data = dummy_corpus(12);
    let config = TrainingConfig {
        epochs: 3,
        optimizer: Optimizer::Sgd,
        ..tiny(0)
    };
    let out = train(&data, &config).unwrap();
    assert_eq!(out.log.len(), 3);
    assert_eq!(out.log[0].epoch, 1);
    assert!(out.log.iter().all(|e| e.train_loss.is_finite()));
    assert!(out.best_epoch <= 3);
}

#[test]
fn train_and_validation_never_share_a_question() {
    let data = dummy_corpus(300);
    let out = train(
        &data,
        &TrainingConfig {
            epochs: 0,
            ..tiny(5)
        },
    )
    .unwrap();
    let t: HashSet<_> = out.train.iter().map(QaInstance::provenance).collect();
    let v: HashSet<_> = out.validation.iter().map(QaInstance::provenance).collect();
    assert!(t.is_disjoint(&v));
    assert_eq!(t.len() + v.len(), 300);
    assert_eq!(v.len(), 30);

    let (a, b) = split_train_validation(data, 0.1, 5).unwrap();
    assert_eq!(a, out.train);
    assert_eq!(b, out.validation);
}

#[test]
fn initial_weight_variance_is_one_tenth() {
    let data = dummy_corpus(3);
    let config = TrainingConfig {
        d: 100,
        hidden: Some(100),
        ..TrainingConfig::default()
    };
    let vocab = build_vocabulary(&data, &config);
    let params = init_parameters(&config, &vocab).unwrap();
    let w = params.get(Param::WIm);
    assert_eq!(w.len(), 10_000);
    let n = w.len() as f64;
    let mean = w.sum() / n;
    let var = w.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((0.09..=0.11).contains(&var), "variance {var}");
    assert!(params.get(Param::BT).as_slice().iter().all(|&b| b == 0.0));
}

#[test]
fn reloaded_checkpoint_decodes_identically() {
    let data = dummy_corpus(30);
    let config = TrainingConfig {
        epochs: 5,
        learning_rate: 0.01,
        ..tiny(2)
    };
    let out = train(&data, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let ckpt = Checkpoint {
        config: config.clone(),
        vocab: out.vocab.clone(),
        params: out.params.clone(),
        epoch: out.best_epoch,
        val_ema: out.best_val_ema,
    };
    save_checkpoint(&path, &ckpt).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.params, out.params);
    assert_eq!(back.vocab, out.vocab);
    assert_eq!(back.config, config);
    let before = evaluate(&out.params, &out.vocab, &data, 1, 5).unwrap();
    let after = evaluate(&back.params, &back.vocab, &data, 1, 5).unwrap();
    assert_eq!(before, after);
}

#[test]
fn same_seed_same_log() {
    let data = dummy_corpus(20);
    let config = TrainingConfig {
        epochs: 3,
        ..tiny(9)
    };
    let a = train(&data, &config).unwrap();
    let b = train(&data, &config).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.params, b.params);
}
