//! Soft attention over sentence memories and the weighted readout.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};

/// `p = softmax(Mᵀu)` over the `n` columns of the `d x n` memory matrix.
pub fn attend(g: &mut Graph, u: Var, memories: Var) -> Result<Var> {
    if g.value(memories).cols() == 0 {
        return Err(Error::contract("question with no prior sentences"));
    }
    let mt = g.transpose(memories);
    let logits = g.matmul(mt, u)?;
    Ok(g.softmax(logits)?)
}

/// `o = Σ p_i m_i = M p`.
pub fn read(g: &mut Graph, p: Var, memories: Var) -> Result<Var> {
    Ok(g.matmul(memories, p)?)
}

/// Result of one or more passes over memory.
#[derive(Clone, Debug)]
pub struct HopOutput {
    /// Readout of the last pass.
    pub o: Var,
    /// Query used by the last pass.
    pub u: Var,
    /// Attention of every pass, in order.
    pub attention: Vec<Var>,
}

/// `K` passes sharing the same memories: `u^{k+1} = u^k + o^k`.
/// With `hops == 1` this is exactly `attend` followed by `read`.
pub fn hop(g: &mut Graph, u: Var, memories: Var, hops: usize) -> Result<HopOutput> {
    if hops == 0 {
        return Err(Error::contract("hop count must be at least 1"));
    }
    let mut query = u;
    let mut attention = Vec::with_capacity(hops);
    let mut o = None;
    for k in 0..hops {
        if k > 0 {
            query = g.add(query, o.expect("set by the previous pass"))?;
        }
        let p = attend(g, query, memories)?;
        attention.push(p);
        o = Some(read(g, p, memories)?);
    }
    Ok(HopOutput {
        o: o.expect("hops >= 1"),
        u: query,
        attention,
    })
}
