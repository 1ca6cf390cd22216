//! Wires the modules into the full forward pass: embed → memory → answer.

use std::collections::BTreeMap;

use crate::answer::{
    decode_greedy, embed_input, init_answer, lstm_step, DecoderState, DecoderVars, InputSignal,
};
use crate::autodiff::{Graph, Matrix, Var};
use crate::corpus::{QaInstance, Vocabulary};
use crate::embedding::{embed_question, embed_sentences, encode_bow, stack_columns};
use crate::error::{Error, Result};
use crate::memory::{hop, HopOutput};
use crate::params::{ModelParameters, Param};

/// An instance mapped onto vocabulary indices.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInstance {
    /// `|V| x n` sentence count vectors.
    pub context: Matrix,
    /// `|V| x 1` question count vector.
    pub question: Matrix,
    /// Gold answer indices, without `<EOS>`.
    pub answer: Vec<usize>,
}

pub fn encode_instance(inst: &QaInstance, vocab: &Vocabulary) -> Result<EncodedInstance> {
    if inst.context.is_empty() {
        return Err(Error::contract(format!(
            "story {}, line {}: question with no prior sentences",
            inst.story_id, inst.line_no
        )));
    }
    let n = inst.context.len();
    let mut sentences: Vec<_> = inst.context.iter().map(|s| encode_bow(s, vocab)).collect();
    for (j, x) in sentences.iter_mut().enumerate() {
        if let Some(t) = vocab.time_index(n - j) {
            x.add(t);
        }
    }
    Ok(EncodedInstance {
        context: stack_columns(&sentences, vocab.len()),
        question: encode_bow(&inst.question, vocab).to_dense(),
        answer: inst.answer.iter().map(|t| vocab.encode(t)).collect(),
    })
}

/// Graph leaves for every active parameter group.
#[derive(Clone, Debug)]
pub struct ParamVars {
    vars: BTreeMap<Param, Var>,
    tied: bool,
}

impl ParamVars {
    pub fn bind(g: &mut Graph, params: &ModelParameters) -> Self {
        let vars = params.iter().map(|(p, m)| (p, g.leaf(m.clone()))).collect();
        Self {
            vars,
            tied: params.dims().tie_a_b,
        }
    }

    pub fn get(&self, p: Param) -> Var {
        let p = if self.tied && p == Param::B {
            Param::A
        } else {
            p
        };
        self.vars[&p]
    }

    pub fn decoder(&self) -> DecoderVars {
        DecoderVars {
            embed: self.get(Param::A),
            w_out: self.get(Param::WOut),
            b_out_init: self.get(Param::BOutInit),
            w_iv: self.get(Param::WIv),
            w_fv: self.get(Param::WFv),
            w_ov: self.get(Param::WOv),
            w_sv: self.get(Param::WSv),
            w_im: self.get(Param::WIm),
            w_fm: self.get(Param::WFm),
            w_om: self.get(Param::WOm),
            w_sm: self.get(Param::WSm),
            b_i: self.get(Param::BI),
            b_f: self.get(Param::BF),
            b_gate_o: self.get(Param::BGateO),
            w_t: self.get(Param::WT),
            b_t: self.get(Param::BT),
        }
    }

    /// Adds `scale * grad` of every leaf into `into`.
    pub fn accumulate_grads(&self, g: &Graph, scale: f64, into: &mut ModelParameters) {
        for (p, m) in into.iter_mut() {
            m.axpy(scale, &g.grad(self.vars[&p]));
        }
    }
}

/// Memories from `A`, the query from `B`, then `hops` attention passes.
pub fn encode_memory(
    g: &mut Graph,
    vars: &ParamVars,
    inst: &EncodedInstance,
    hops: usize,
) -> Result<HopOutput> {
    let memories = embed_sentences(g, &inst.context, vars.get(Param::A))?;
    let u = embed_question(g, &inst.question, vars.get(Param::B))?;
    hop(g, u, memories, hops)
}

/// Teacher-forced decoder loss: summed cross-entropy over the gold words
/// followed by `<EOS>`, each step fed the gold previous word.
pub fn answer_loss(
    g: &mut Graph,
    vars: &ParamVars,
    memory: &HopOutput,
    answer: &[usize],
    eos: usize,
) -> Result<Var> {
    let p = vars.decoder();
    let a0 = init_answer(g, memory.o, memory.u, p.w_out, p.b_out_init)?;
    let hidden = g.value(p.b_i).rows();
    let mut state = DecoderState::initial(g, hidden);
    let mut v = embed_input(g, InputSignal::Distribution(a0), p.embed)?;
    let mut total: Option<Var> = None;
    for (t, &target) in answer.iter().chain(std::iter::once(&eos)).enumerate() {
        if t > 0 {
            v = embed_input(g, InputSignal::Word(answer[t - 1]), p.embed)?;
        }
        let (next, logits) = lstm_step(g, v, &state, &p)?;
        state = next;
        let probs = g.softmax(logits)?;
        let ce = g.cross_entropy(probs, target)?;
        total = Some(match total {
            Some(acc) => g.add(acc, ce)?,
            None => ce,
        });
    }
    Ok(total.expect("at least the <EOS> step"))
}

/// Greedy answer plus the attention of the final memory pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub words: Vec<usize>,
    pub attention: Vec<f64>,
}

pub fn predict(
    params: &ModelParameters,
    inst: &EncodedInstance,
    hops: usize,
    max_len: usize,
    eos: usize,
) -> Result<Prediction> {
    let mut g = Graph::new();
    let vars = ParamVars::bind(&mut g, params);
    let memory = encode_memory(&mut g, &vars, inst, hops)?;
    let words = decode_greedy(&mut g, memory.o, memory.u, &vars.decoder(), eos, max_len)?;
    let attention = memory
        .attention
        .last()
        .map(|&p| g.value(p).as_slice().to_vec())
        .unwrap_or_default();
    Ok(Prediction { words, attention })
}
