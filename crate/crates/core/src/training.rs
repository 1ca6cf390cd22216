//! End-to-end training: parameter initialisation, the teacher-forced loss,
//! mini-batch SGD with global-norm clipping, and best-epoch selection on
//! validation exact-match accuracy.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::corpus::{split_train_validation, QaInstance, Vocabulary};
use crate::embedding::load_pretrained;
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{answer_loss, encode_instance, encode_memory, EncodedInstance, ParamVars};
use crate::params::{ModelDims, ModelParameters, Param};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// `θ ← θ − lr ∇θ`
    Sgd,
    /// Bias-corrected moment estimates, β = (0.9, 0.999), ε = 1e-8.
    #[default]
    Adam,
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!(
                "unknown optimizer {other:?} (expected sgd or adam)"
            )),
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
/// Short second-moment memory (about ten steps). With 0.999 the begin-of-answer
/// softmax saturates early and the stale moments keep it there for dozens
/// of epochs.
const ADAM_BETA2: f64 = 0.9;
const ADAM_EPSILON: f64 = 1e-8;

/// Per-run optimizer state.
#[derive(Clone, Debug)]
pub enum OptimizerState {
    Sgd,
    Adam {
        m: ModelParameters,
        v: ModelParameters,
        t: i32,
    },
}

impl OptimizerState {
    pub fn new(kind: Optimizer, dims: ModelDims) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam {
                m: ModelParameters::zeros(dims),
                v: ModelParameters::zeros(dims),
                t: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut ModelParameters, grads: &ModelParameters, lr: f64) {
        match self {
            OptimizerState::Sgd => sgd_step(params, grads, lr),
            OptimizerState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                let moments = m.iter_mut().zip(v.iter_mut()).zip(grads.iter());
                for ((_, p), (((_, m), (_, v)), (_, g))) in params.iter_mut().zip(moments) {
                    let (p, m, v) = (p.as_mut_slice(), m.as_mut_slice(), v.as_mut_slice());
                    for (i, &g) in g.as_slice().iter().enumerate() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPSILON);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Standard deviation of the Gaussian weight init (variance 0.1 by default).
    pub init_std: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub hops: usize,
    /// Embedding width.
    pub d: usize,
    /// Decoder width; `None` means `d`.
    pub hidden: Option<usize>,
    pub max_len: usize,
    pub grad_clip: f64,
    pub tie_a_b: bool,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Adds a learned recency token to every memory sentence.
    #[serde(default)]
    pub temporal: bool,
    pub pretrained_path: Option<PathBuf>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            batch_size: 32,
            epochs: 200,
            init_std: 0.1f64.sqrt(),
            validation_fraction: 0.1,
            seed: 0,
            hops: 1,
            d: 100,
            hidden: None,
            max_len: 5,
            grad_clip: 40.0,
            tie_a_b: false,
            optimizer: Optimizer::default(),
            temporal: true,
            pretrained_path: None,
        }
    }
}

impl TrainingConfig {
    pub fn hidden(&self) -> usize {
        self.hidden.unwrap_or(self.d)
    }

    pub fn dims(&self, vocab: &Vocabulary) -> ModelDims {
        ModelDims {
            vocab: vocab.len(),
            d: self.d,
            hidden: self.hidden(),
            tie_a_b: self.tie_a_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::contract(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return bad(format!("init std must be positive, got {}", self.init_std));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        if self.hops == 0 || self.d == 0 || self.hidden() == 0 || self.max_len == 0 {
            return bad("hops, d, hidden and max_len must be positive".into());
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return bad(format!(
                "gradient clip must be positive, got {}",
                self.grad_clip
            ));
        }
        Ok(())
    }

    /// `key = value` lines, one per field.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "init_std = {}", self.init_std);
        let _ = writeln!(s, "validation_fraction = {}", self.validation_fraction);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "hops = {}", self.hops);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "hidden = {}", self.hidden());
        let _ = writeln!(s, "max_len = {}", self.max_len);
        let _ = writeln!(s, "grad_clip = {}", self.grad_clip);
        let _ = writeln!(s, "tie_a_b = {}", self.tie_a_b);
        let _ = writeln!(s, "optimizer = {}", self.optimizer);
        let _ = writeln!(s, "temporal = {}", self.temporal);
        let _ = writeln!(
            s,
            "pretrained = {}",
            self.pretrained_path
                .as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        );
        s
    }
}

/// Seeded Gaussian weights, zero biases, and pretrained columns of `A`
/// (and `B`) when configured.
pub fn init_parameters(config: &TrainingConfig, vocab: &Vocabulary) -> Result<ModelParameters> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParameters::gaussian(config.dims(vocab), config.init_std, &mut rng);
    if let Some(path) = &config.pretrained_path {
        let pre = load_pretrained(path, vocab, config.d, config.init_std, &mut rng)?;
        log::info!(
            "{}: pretrained vectors for {} tokens (coverage {:.3})",
            path.display(),
            pre.covered,
            pre.coverage
        );
        *params.get_mut(Param::A) = pre.matrix.clone();
        if !config.tie_a_b {
            *params.get_mut(Param::B) = pre.matrix;
        }
    }
    Ok(params)
}

/// Drops answer words beyond `max_len`, with a warning.
fn truncate_answer(answer: &[usize], max_len: usize) -> &[usize] {
    if answer.len() > max_len {
        log::warn!(
            "answer of {} words truncated to max_len {}",
            answer.len(),
            max_len
        );
        &answer[..max_len]
    } else {
        answer
    }
}

/// Builds the full forward pass for one instance and returns its summed
/// per-word cross-entropy (gold words, then `<EOS>`).
pub fn example_loss(
    g: &mut Graph,
    vars: &ParamVars,
    inst: &EncodedInstance,
    config: &TrainingConfig,
    eos: usize,
) -> Result<Var> {
    let memory = encode_memory(g, vars, inst, config.hops)?;
    let answer = truncate_answer(&inst.answer, config.max_len);
    answer_loss(g, vars, &memory, answer, eos)
}

/// Loss value alone.
pub fn loss_value(
    params: &ModelParameters,
    inst: &EncodedInstance,
    config: &TrainingConfig,
    eos: usize,
) -> Result<f64> {
    let mut g = Graph::new();
    let vars = ParamVars::bind(&mut g, params);
    let loss = example_loss(&mut g, &vars, inst, config, eos)?;
    Ok(g.value(loss).as_slice()[0])
}

/// Mean loss over `batch` and its gradient.
pub fn batch_gradient(
    params: &ModelParameters,
    batch: &[&EncodedInstance],
    config: &TrainingConfig,
    eos: usize,
) -> Result<(f64, ModelParameters)> {
    let mut grads = ModelParameters::zeros(*params.dims());
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for inst in batch {
        let mut g = Graph::new();
        let vars = ParamVars::bind(&mut g, params);
        let loss = example_loss(&mut g, &vars, inst, config, eos)?;
        total += g.value(loss).as_slice()[0];
        g.backward(loss)?;
        vars.accumulate_grads(&g, scale, &mut grads);
    }
    Ok((total * scale, grads))
}

/// Rescales `grads` so its global norm does not exceed `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut ModelParameters, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        let mut factor = max_norm / norm;
        grads.scale(factor);
        // Rounding can leave the norm a few ulps above the bound.
        while grads.global_norm() > max_norm {
            factor = 1.0 - 4.0 * f64::EPSILON;
            grads.scale(factor);
        }
    }
    norm
}

/// `θ ← θ − lr ∇θ`.
pub fn sgd_step(params: &mut ModelParameters, grads: &ModelParameters, learning_rate: f64) {
    params.axpy(-learning_rate, grads);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_ema: f64,
}

impl EpochLog {
    /// `epoch<TAB>train_loss<TAB>val_ema`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{:.8}\t{:.6}",
            self.epoch, self.train_loss, self.val_ema
        )
    }
}

pub fn format_epoch_log(log: &[EpochLog]) -> String {
    log.iter().map(|e| e.to_line() + "\n").collect()
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub vocab: Vocabulary,
    /// Parameters of the best validation epoch (epoch 0 = initialisation).
    pub params: ModelParameters,
    pub best_epoch: usize,
    pub best_val_ema: f64,
    pub log: Vec<EpochLog>,
    pub train: Vec<QaInstance>,
    pub validation: Vec<QaInstance>,
}

/// Corpus vocabulary, plus recency tokens up to the longest context when
/// `config.temporal` is set.
pub fn build_vocabulary(dataset: &[QaInstance], config: &TrainingConfig) -> Vocabulary {
    let mut vocab = Vocabulary::build(dataset);
    if config.temporal {
        let longest = dataset.iter().map(|i| i.context.len()).max().unwrap_or(0);
        vocab.add_time_tokens(longest);
    }
    vocab
}

/// Builds the vocabulary over `dataset`, holds out the validation split and
/// trains.
pub fn train(dataset: &[QaInstance], config: &TrainingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::contract("training set is empty"));
    }
    let vocab = build_vocabulary(dataset, config);
    let (train_set, val_set) =
        split_train_validation(dataset.to_vec(), config.validation_fraction, config.seed)?;
    let params = init_parameters(config, &vocab)?;
    let (params, best_epoch, best_val_ema, log) =
        train_from(params, &vocab, &train_set, &val_set, config, |_| {})?;
    Ok(TrainOutcome {
        vocab,
        params,
        best_epoch,
        best_val_ema,
        log,
        train: train_set,
        validation: val_set,
    })
}

/// Training loop from given parameters. `on_epoch` sees each log entry as
/// it is produced. Returns `(best params, best epoch, best val EMA, log)`.
pub fn train_from(
    mut params: ModelParameters,
    vocab: &Vocabulary,
    train_set: &[QaInstance],
    val_set: &[QaInstance],
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(ModelParameters, usize, f64, Vec<EpochLog>)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::contract("training set is empty"));
    }
    let encoded: Vec<EncodedInstance> = train_set
        .iter()
        .map(|i| encode_instance(i, vocab))
        .collect::<Result<_>>()?;
    let eos = vocab.eos();
    let val_ema = |p: &ModelParameters| -> Result<f64> {
        if val_set.is_empty() {
            return Ok(0.0);
        }
        Ok(evaluate(p, vocab, val_set, config.hops, config.max_len)?.ema)
    };

    let mut optimizer = OptimizerState::new(config.optimizer, *params.dims());
    let mut best = (params.clone(), 0, val_ema(&params)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_5917);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EncodedInstance> = chunk.iter().map(|&i| &encoded[i]).collect();
            let (loss, mut grads) = batch_gradient(&params, &batch, config, eos)?;
            if !loss.is_finite() || !grads.all_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            loss_sum += loss * batch.len() as f64;
            clip_global_norm(&mut grads, config.grad_clip);
            optimizer.step(&mut params, &grads, config.learning_rate);
        }
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / encoded.len() as f64,
            val_ema: val_ema(&params)?,
        };
        on_epoch(&entry);
        if entry.val_ema >= best.2 {
            best = (params.clone(), epoch, entry.val_ema);
        }
        log.push(entry);
    }
    Ok((best.0, best.1, best.2, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_instances;

    const FIXTURE: &str = "1 Mary went to the shower room.\n2 John went to the garden.\n\
                           3 Where is Mary?\tshower room\t1\n\
                           1 Bill journeyed to the guest room.\n2 Fred moved to the kitchen.\n\
                           3 Where is Bill?\tguest room\t1\n";

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            d: 8,
            hidden: Some(8),
            batch_size: 2,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn defaults_match_reported_hyperparameters() {
        let c = TrainingConfig::default();
        assert_eq!(c.learning_rate, 0.002);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.epochs, 200);
        assert!((c.init_std * c.init_std - 0.1).abs() < 1e-15);
        assert_eq!(c.validation_fraction, 0.1);
        assert_eq!(c.d, 100);
        assert_eq!(c.hidden(), 100);
        assert_eq!(c.max_len, 5);
        assert_eq!(c.grad_clip, 40.0);
    }

    #[test]
    fn zero_parameters_give_uniform_loss() {
        let inst = load_instances(FIXTURE).unwrap();
        let vocab = Vocabulary::build(&inst);
        let config = small_config();
        let params = ModelParameters::zeros(config.dims(&vocab));
        let enc = encode_instance(&inst[0], &vocab).unwrap();
        let loss = loss_value(&params, &enc, &config, vocab.eos()).unwrap();
        let want = 3.0 * (vocab.len() as f64).ln();
        assert!((loss - want).abs() < 1e-12, "{loss} vs {want}");
    }

    #[test]
    fn forced_first_word_costs_nothing_and_eos_hits_clamp() {
        // All weights zero: logits equal b_t at both steps. A huge bias on
        // the gold word makes step one free and step two (target <EOS>)
        // bottom out at the log clamp.
        let inst = load_instances(FIXTURE).unwrap();
        let vocab = Vocabulary::build(&inst);
        let config = small_config();
        let mut params = ModelParameters::zeros(config.dims(&vocab));
        let mut enc = encode_instance(&inst[0], &vocab).unwrap();
        enc.answer.truncate(1);
        params.get_mut(Param::BT).as_mut_slice()[enc.answer[0]] = 60.0;
        let loss = loss_value(&params, &enc, &config, vocab.eos()).unwrap();
        assert!(
            (loss - crate::autodiff::LOG_CLAMP.ln().abs()).abs() < 1e-9,
            "{loss}"
        );
    }

    #[test]
    fn same_seed_same_parameters() {
        let inst = load_instances(FIXTURE).unwrap();
        let vocab = Vocabulary::build(&inst);
        let config = small_config();
        assert_eq!(
            init_parameters(&config, &vocab).unwrap(),
            init_parameters(&config, &vocab).unwrap()
        );
    }

    #[test]
    fn clipping_bounds_norm() {
        let inst = load_instances(FIXTURE).unwrap();
        let vocab = Vocabulary::build(&inst);
        let mut grads = init_parameters(&small_config(), &vocab).unwrap();
        grads.scale(100.0);
        let before = clip_global_norm(&mut grads, 1.5);
        assert!(before > 1.5);
        assert!(grads.global_norm() <= 1.5);
        let mut small = grads.clone();
        small.scale(0.1);
        let norm = small.global_norm();
        clip_global_norm(&mut small, 1.5);
        assert_eq!(small.global_norm(), norm);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let inst = load_instances(FIXTURE).unwrap();
        let vocab = Vocabulary::build(&inst);
        let config = TrainingConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..small_config()
        };
        let init = init_parameters(&config, &vocab).unwrap();
        let (params, _, _, log) =
            train_from(init.clone(), &vocab, &inst, &inst[..1], &config, |_| {}).unwrap();
        assert_eq!(params, init);
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for c in [
            TrainingConfig {
                batch_size: 0,
                ..TrainingConfig::default()
            },
            TrainingConfig {
                validation_fraction: 1.0,
                ..TrainingConfig::default()
            },
            TrainingConfig {
                hops: 0,
                ..TrainingConfig::default()
            },
            TrainingConfig {
                learning_rate: -1.0,
                ..TrainingConfig::default()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn epoch_log_line_format() {
        let e = EpochLog {
            epoch: 3,
            train_loss: 0.5,
            val_ema: 0.25,
        };
        assert_eq!(e.to_line(), "3\t0.50000000\t0.250000");
    }
}
