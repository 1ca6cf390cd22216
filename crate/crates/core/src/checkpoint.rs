//! Binary checkpoint container.
//!
//! Layout: the 8-byte magic `LTMNCKPT`, a little-endian `u32` format
//! version, a little-endian `u64` header length, a UTF-8 JSON header
//! (config, vocabulary, epoch, validation EMA, dims and the tensor table),
//! then every tensor's entries as little-endian `f64` in table order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::params::{ModelDims, ModelParameters, Param};
use crate::training::TrainingConfig;

pub const MAGIC: &[u8; 8] = b"LTMNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainingConfig,
    pub vocab: Vocabulary,
    pub params: ModelParameters,
    pub epoch: usize,
    pub val_ema: f64,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainingConfig,
    vocab: Vocabulary,
    epoch: usize,
    val_ema: f64,
    vocab_size: usize,
    d: usize,
    hidden: usize,
    tie_a_b: bool,
    tensors: Vec<TensorEntry>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dims = *self.params.dims();
        let header = Header {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            epoch: self.epoch,
            val_ema: self.val_ema,
            vocab_size: dims.vocab,
            d: dims.d,
            hidden: dims.hidden,
            tie_a_b: dims.tie_a_b,
            tensors: self
                .params
                .iter()
                .map(|(p, m)| TensorEntry {
                    name: p.name().to_string(),
                    rows: m.rows(),
                    cols: m.cols(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::contract(format!("cannot encode checkpoint header: {e}")))?;
        let mut out = Vec::with_capacity(20 + json.len() + 8 * self.params.entry_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, m) in self.params.iter() {
            for x in m.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// `source` names the input in error messages.
    pub fn from_bytes(bytes: &[u8], source: &str) -> Result<Self> {
        let fail = |offset: usize, message: String| Error::Format {
            path: source.to_string(),
            message: format!("at byte {offset}: {message}"),
        };
        let mut r = Reader { bytes, pos: 0 };
        let magic = r
            .take(8)
            .map_err(|at| fail(at, "file too short for magic".into()))?;
        if magic != MAGIC {
            return Err(fail(0, "not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(
            r.take(4)
                .map_err(|at| fail(at, "truncated version".into()))?
                .try_into()
                .expect("4 bytes"),
        );
        if version != FORMAT_VERSION {
            return Err(fail(
                8,
                format!("unsupported checkpoint format version {version} (this build reads version {FORMAT_VERSION})"),
            ));
        }
        let header_len = u64::from_le_bytes(
            r.take(8)
                .map_err(|at| fail(at, "truncated header length".into()))?
                .try_into()
                .expect("8 bytes"),
        );
        let header_start = r.pos;
        let header_len = usize::try_from(header_len)
            .map_err(|_| fail(header_start - 8, "header length overflows".into()))?;
        let json = r.take(header_len).map_err(|at| {
            fail(
                at,
                format!("truncated header (declared {header_len} bytes)"),
            )
        })?;
        let header: Header = serde_json::from_slice(json).map_err(|e| {
            fail(
                header_start + e.column().saturating_sub(1),
                format!("bad header: {e}"),
            )
        })?;
        let dims = ModelDims {
            vocab: header.vocab_size,
            d: header.d,
            hidden: header.hidden,
            tie_a_b: header.tie_a_b,
        };
        if header.vocab.len() != dims.vocab {
            return Err(fail(
                header_start,
                format!(
                    "vocabulary has {} tokens but dims declare {}",
                    header.vocab.len(),
                    dims.vocab
                ),
            ));
        }
        let mut tensors = BTreeMap::new();
        for entry in &header.tensors {
            let param = Param::from_name(&entry.name)
                .ok_or_else(|| fail(header_start, format!("unknown tensor {:?}", entry.name)))?;
            let count = entry
                .rows
                .checked_mul(entry.cols)
                .ok_or_else(|| fail(header_start, format!("tensor {} too large", entry.name)))?;
            let start = r.pos;
            let raw = r.take(count.saturating_mul(8)).map_err(|at| {
                fail(
                    at,
                    format!(
                        "truncated data for tensor {} (starts at byte {start})",
                        entry.name
                    ),
                )
            })?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let m = Matrix::from_vec(entry.rows, entry.cols, data)
                .map_err(|e| fail(start, e.to_string()))?;
            if tensors.insert(param, m).is_some() {
                return Err(fail(
                    header_start,
                    format!("duplicate tensor {}", entry.name),
                ));
            }
        }
        if r.pos != bytes.len() {
            return Err(fail(
                r.pos,
                format!("{} trailing bytes after tensor data", bytes.len() - r.pos),
            ));
        }
        let params = ModelParameters::from_tensors(dims, tensors)
            .map_err(|m| fail(header_start, format!("inconsistent tensor table: {m}")))?;
        Ok(Self {
            config: header.config,
            vocab: header.vocab,
            params,
            epoch: header.epoch,
            val_ema: header.val_ema,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Err carries the offset where the read ran out.
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], usize> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.bytes.len()),
        }
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let bytes = checkpoint.to_bytes()?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(tie: bool) -> Checkpoint {
        let mut vocab = Vocabulary::new();
        for w in ["mary", "went", "garden", "where", "is", "?"] {
            vocab.insert(w);
        }
        let dims = ModelDims {
            vocab: vocab.len(),
            d: 4,
            hidden: 3,
            tie_a_b: tie,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = ModelParameters::gaussian(dims, 0.3, &mut rng);
        params.get_mut(Param::BT).as_mut_slice()[0] = f64::MIN_POSITIVE / 3.0;
        Checkpoint {
            config: TrainingConfig {
                d: 4,
                hidden: Some(3),
                tie_a_b: tie,
                ..TrainingConfig::default()
            },
            vocab,
            params,
            epoch: 17,
            val_ema: 0.625,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        for tie in [false, true] {
            let c = sample(tie);
            let back = Checkpoint::from_bytes(&c.to_bytes().unwrap(), "mem").unwrap();
            assert_eq!(back, c);
            for ((_, a), (_, b)) in c.params.iter().zip(back.params.iter()) {
                let ab: Vec<u64> = a.as_slice().iter().map(|x| x.to_bits()).collect();
                let bb: Vec<u64> = b.as_slice().iter().map(|x| x.to_bits()).collect();
                assert_eq!(ab, bb);
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = sample(false);
        save_checkpoint(&path, &c).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), c);
    }

    #[test]
    fn every_truncation_is_a_format_error() {
        let bytes = sample(false).to_bytes().unwrap();
        for cut in (0..bytes.len()).step_by(7) {
            match Checkpoint::from_bytes(&bytes[..cut], "cut") {
                Err(Error::Format { message, .. }) => assert!(message.contains("at byte")),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = sample(false).to_bytes().unwrap();
        bytes.push(0);
        assert!(matches!(
            Checkpoint::from_bytes(&bytes, "x"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn version_mismatch_is_explained() {
        let mut bytes = sample(false).to_bytes().unwrap();
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        let err = Checkpoint::from_bytes(&bytes, "x").unwrap_err().to_string();
        assert!(err.contains("version 7"), "{err}");
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = sample(false).to_bytes().unwrap();
        bytes[0] = b'X';
        let err = Checkpoint::from_bytes(&bytes, "x").unwrap_err().to_string();
        assert!(err.contains("magic"), "{err}");
    }
}
