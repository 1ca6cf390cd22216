//! Answer generation: the begin-of-answer distribution and the LSTM that
//! emits one word per step.
//!
//! The recurrence is the one the model defines, which differs from the
//! textbook cell in three places: the gates read the previous *output*
//! `y_{t-1}`, the output is `y_t = o_t ⊙ s_t` with no squashing of the cell
//! state, and the cell candidate has no bias. Building with the
//! `textbook-lstm` feature applies `tanh` to the cell state in the output
//! (diagnostics only).

use crate::autodiff::{Graph, Matrix, Var};
use crate::error::Result;

/// Graph handles for every decoder parameter.
#[derive(Clone, Copy, Debug)]
pub struct DecoderVars {
    /// Word embedding `E`, shared with the sentence embedding `A`.
    pub embed: Var,
    pub w_out: Var,
    pub b_out_init: Var,
    pub w_iv: Var,
    pub w_fv: Var,
    pub w_ov: Var,
    pub w_sv: Var,
    pub w_im: Var,
    pub w_fm: Var,
    pub w_om: Var,
    pub w_sm: Var,
    pub b_i: Var,
    pub b_f: Var,
    pub b_gate_o: Var,
    pub w_t: Var,
    pub b_t: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct DecoderState {
    /// Cell state `s_t`.
    pub s: Var,
    /// Output vector `y_t`.
    pub y: Var,
    pub t: usize,
}

impl DecoderState {
    /// `s_0 = 0`, `y_0 = 0`.
    pub fn initial(g: &mut Graph, hidden: usize) -> Self {
        Self {
            s: g.constant(Matrix::zeros(hidden, 1)),
            y: g.constant(Matrix::zeros(hidden, 1)),
            t: 0,
        }
    }
}

/// What the decoder consumes at a step.
#[derive(Clone, Copy, Debug)]
pub enum InputSignal {
    /// The begin-of-answer distribution `a_0` over the vocabulary.
    Distribution(Var),
    /// A word index.
    Word(usize),
}

/// `a_0 = softmax(W_o (o + u) + b_o_init)`.
pub fn init_answer(g: &mut Graph, o: Var, u: Var, w_out: Var, b_out_init: Var) -> Result<Var> {
    let sum = g.add(o, u)?;
    let proj = g.matmul(w_out, sum)?;
    let logits = g.add(proj, b_out_init)?;
    Ok(g.softmax(logits)?)
}

/// Word index → column of `E`; distribution → expected embedding `E a_0`.
pub fn embed_input(g: &mut Graph, signal: InputSignal, embed: Var) -> Result<Var> {
    match signal {
        InputSignal::Distribution(a0) => Ok(g.matmul(embed, a0)?),
        InputSignal::Word(w) => Ok(g.column(embed, w)?),
    }
}

fn gate(g: &mut Graph, w_v: Var, v: Var, w_m: Var, y: Var, bias: Option<Var>) -> Result<Var> {
    let a = g.matmul(w_v, v)?;
    let b = g.matmul(w_m, y)?;
    let pre = g.add(a, b)?;
    Ok(match bias {
        Some(b) => g.add(pre, b)?,
        None => pre,
    })
}

/// One decoder step. Returns the new state and the pre-softmax word
/// logits `W_t y_t + b_t`.
pub fn lstm_step(
    g: &mut Graph,
    v: Var,
    state: &DecoderState,
    p: &DecoderVars,
) -> Result<(DecoderState, Var)> {
    let y_prev = state.y;
    let pre_i = gate(g, p.w_iv, v, p.w_im, y_prev, Some(p.b_i))?;
    let i = g.sigmoid(pre_i);
    let pre_f = gate(g, p.w_fv, v, p.w_fm, y_prev, Some(p.b_f))?;
    let f = g.sigmoid(pre_f);
    let pre_o = gate(g, p.w_ov, v, p.w_om, y_prev, Some(p.b_gate_o))?;
    let o = g.sigmoid(pre_o);
    let pre_c = gate(g, p.w_sv, v, p.w_sm, y_prev, None)?;
    let candidate = g.tanh(pre_c);

    let keep = g.hadamard(f, state.s)?;
    let write = g.hadamard(i, candidate)?;
    let s = g.add(keep, write)?;
    let y = if cfg!(feature = "textbook-lstm") {
        let squashed = g.tanh(s);
        g.hadamard(o, squashed)?
    } else {
        g.hadamard(o, s)?
    };
    let proj = g.matmul(p.w_t, y)?;
    let logits = g.add(proj, p.b_t)?;
    Ok((
        DecoderState {
            s,
            y,
            t: state.t + 1,
        },
        logits,
    ))
}

/// Greedy decoding: the first step consumes `E a_0`, later steps the
/// embedding of the previous word. Stops on `<EOS>` (not returned) or after
/// `max_len` words; argmax ties go to the lowest index.
pub fn decode_greedy(
    g: &mut Graph,
    o: Var,
    u: Var,
    p: &DecoderVars,
    eos: usize,
    max_len: usize,
) -> Result<Vec<usize>> {
    let a0 = init_answer(g, o, u, p.w_out, p.b_out_init)?;
    let hidden = g.value(p.b_i).rows();
    let mut state = DecoderState::initial(g, hidden);
    let mut v = embed_input(g, InputSignal::Distribution(a0), p.embed)?;
    let mut words = Vec::new();
    while words.len() < max_len {
        let (next, logits) = lstm_step(g, v, &state, p)?;
        state = next;
        let w = g.value(logits).argmax();
        if w == eos {
            break;
        }
        words.push(w);
        v = embed_input(g, InputSignal::Word(w), p.embed)?;
    }
    Ok(words)
}
