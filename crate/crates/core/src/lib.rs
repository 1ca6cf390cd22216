//! Long-term memory network for question answering.
//!
//! Sentences of a story are embedded as bags of words, matched against the
//! question by soft attention, and the attended readout drives an LSTM that
//! generates a possibly multi-word answer. Everything, including reverse-mode
//! differentiation, is implemented here on dense `f64` matrices.

pub mod answer;
pub mod autodiff;
pub mod checkpoint;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod gradcheck;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod params;
pub mod training;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use corpus::{QaInstance, Vocabulary};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricsReport};
pub use model::{encode_instance, predict, EncodedInstance, Prediction};
pub use params::{ModelDims, ModelParameters, Param};
pub use training::{train, TrainOutcome, TrainingConfig};
