//! Every learnable matrix of the model.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Matrix, ParameterSet};

/// Parameter groups. `B` is absent when the question embedding is tied to `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    /// Sentence embedding, `d x |V|`; also the decoder's word embedding.
    A,
    /// Question embedding, `d x |V|`.
    B,
    /// Begin-of-answer projection, `|V| x d`.
    WOut,
    /// Begin-of-answer bias, `|V|`.
    BOutInit,
    WIv,
    WFv,
    WOv,
    WSv,
    WIm,
    WFm,
    WOm,
    WSm,
    BI,
    BF,
    /// Output-gate bias, `h`.
    BGateO,
    /// Word projection, `|V| x h`.
    WT,
    BT,
}

impl Param {
    pub const ALL: [Param; 17] = [
        Param::A,
        Param::B,
        Param::WOut,
        Param::BOutInit,
        Param::WIv,
        Param::WFv,
        Param::WOv,
        Param::WSv,
        Param::WIm,
        Param::WFm,
        Param::WOm,
        Param::WSm,
        Param::BI,
        Param::BF,
        Param::BGateO,
        Param::WT,
        Param::BT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::A => "A",
            Param::B => "B",
            Param::WOut => "W_o",
            Param::BOutInit => "b_o_init",
            Param::WIv => "W_iv",
            Param::WFv => "W_fv",
            Param::WOv => "W_ov",
            Param::WSv => "W_sv",
            Param::WIm => "W_im",
            Param::WFm => "W_fm",
            Param::WOm => "W_om",
            Param::WSm => "W_sm",
            Param::BI => "b_i",
            Param::BF => "b_f",
            Param::BGateO => "b_gate_o",
            Param::WT => "W_t",
            Param::BT => "b_t",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn is_bias(self) -> bool {
        matches!(
            self,
            Param::BOutInit | Param::BI | Param::BF | Param::BGateO | Param::BT
        )
    }

    /// `(rows, cols)` for the given dimensions.
    pub fn shape(self, dims: &ModelDims) -> (usize, usize) {
        let (v, d, h) = (dims.vocab, dims.d, dims.hidden);
        match self {
            Param::A | Param::B => (d, v),
            Param::WOut => (v, d),
            Param::BOutInit | Param::BT => (v, 1),
            Param::WIv | Param::WFv | Param::WOv | Param::WSv => (h, d),
            Param::WIm | Param::WFm | Param::WOm | Param::WSm => (h, h),
            Param::BI | Param::BF | Param::BGateO => (h, 1),
            Param::WT => (v, h),
        }
    }
}

/// Sizes that fix every parameter shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    /// Embedding width; the decoder input width equals it because the
    /// decoder reuses `A` for word embeddings.
    pub d: usize,
    pub hidden: usize,
    pub tie_a_b: bool,
}

impl ModelDims {
    pub fn active(&self) -> impl Iterator<Item = Param> + '_ {
        Param::ALL
            .into_iter()
            .filter(move |&p| !(self.tie_a_b && p == Param::B))
    }
}

/// All parameter matrices, keyed by group.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    dims: ModelDims,
    tensors: BTreeMap<Param, Matrix>,
}

impl ModelParameters {
    pub fn zeros(dims: ModelDims) -> Self {
        let tensors = dims
            .active()
            .map(|p| {
                let (r, c) = p.shape(&dims);
                (p, Matrix::zeros(r, c))
            })
            .collect();
        Self { dims, tensors }
    }

    /// Weights drawn from `N(0, std²)`, biases zero.
    pub fn gaussian<R: Rng>(dims: ModelDims, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("std must be finite and non-negative");
        let mut params = Self::zeros(dims);
        for (p, m) in params.tensors.iter_mut() {
            if !p.is_bias() {
                m.as_mut_slice()
                    .iter_mut()
                    .for_each(|x| *x = normal.sample(rng));
            }
        }
        params
    }

    /// Rebuilds from named matrices, checking every shape.
    pub fn from_tensors(dims: ModelDims, tensors: BTreeMap<Param, Matrix>) -> Result<Self, String> {
        let expected: Vec<Param> = dims.active().collect();
        let got: Vec<Param> = tensors.keys().copied().collect();
        if expected != got {
            return Err(format!(
                "parameter groups {got:?} do not match {expected:?}"
            ));
        }
        for (p, m) in &tensors {
            if m.shape() != p.shape(&dims) {
                return Err(format!(
                    "{} has shape {:?}, expected {:?}",
                    p.name(),
                    m.shape(),
                    p.shape(&dims)
                ));
            }
        }
        Ok(Self { dims, tensors })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    /// Resolves `B` to `A` when tied.
    pub fn resolve(&self, p: Param) -> Param {
        if self.dims.tie_a_b && p == Param::B {
            Param::A
        } else {
            p
        }
    }

    pub fn get(&self, p: Param) -> &Matrix {
        &self.tensors[&self.resolve(p)]
    }

    pub fn get_mut(&mut self, p: Param) -> &mut Matrix {
        let p = self.resolve(p);
        self.tensors.get_mut(&p).expect("active parameter")
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, &Matrix)> {
        self.tensors.iter().map(|(p, m)| (*p, m))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (Param, &mut Matrix)> {
        self.tensors.iter_mut().map(|(p, m)| (*p, m))
    }

    pub fn entry_count(&self) -> usize {
        self.tensors.values().map(Matrix::len).sum()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParameters) {
        for (p, m) in self.tensors.iter_mut() {
            m.axpy(alpha, &other.tensors[p]);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.tensors.values_mut().for_each(|m| m.scale(alpha));
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .values()
            .map(Matrix::squared_norm)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(Matrix::all_finite)
    }

    /// Matrices in group order, as consumed by `gradient_check`.
    pub fn to_vec(&self) -> Vec<Matrix> {
        self.tensors.values().cloned().collect()
    }
}

impl ParameterSet for ModelParameters {
    fn group_count(&self) -> usize {
        self.tensors.len()
    }

    fn group_name(&self, index: usize) -> String {
        self.tensors
            .keys()
            .nth(index)
            .map(|p| p.name().to_string())
            .unwrap_or_default()
    }

    fn group(&self, index: usize) -> &Matrix {
        self.tensors
            .values()
            .nth(index)
            .expect("group index in range")
    }

    fn group_mut(&mut self, index: usize) -> &mut Matrix {
        self.tensors
            .values_mut()
            .nth(index)
            .expect("group index in range")
    }
}
