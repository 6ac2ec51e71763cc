//! Sequence encoders. Native backends embed each block and mean-pool the
//! block vectors into the sequence vector.

mod paragraph;
mod projection;
pub mod vecfile;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use paragraph::{ParagraphParams, ParagraphVector, TrainLog};
pub use projection::TfidfProjection;

use crate::codec::{DecodeError, Reader, Writer};

pub const DEFAULT_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedError {
    InvalidHyperparameter(&'static str),
    DimensionMismatch { expected: usize, found: usize },
    UnknownSequence(String),
    /// The backend cannot embed code it has not seen (imported tables).
    QueryUnsupported,
    Format(DecodeError),
}

impl core::error::Error for EmbedError {}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::InvalidHyperparameter(what) => write!(f, "invalid hyperparameter: {what}"),
            EmbedError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            EmbedError::UnknownSequence(id) => write!(f, "no vector for sequence {id}"),
            EmbedError::QueryUnsupported => f.write_str("imported vectors cannot embed new code"),
            EmbedError::Format(e) => write!(f, "bad encoder data: {e}"),
        }
    }
}

impl From<DecodeError> for EmbedError {
    fn from(e: DecodeError) -> Self {
        EmbedError::Format(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f32>,
    /// No block had any token; `values` is the zero vector.
    pub empty: bool,
}

/// A backend that embeds token blocks.
pub trait SequenceEncoder {
    fn encoder_id(&self) -> String;
    fn dim(&self) -> usize;
    fn encode_block(&self, tokens: &[u32]) -> Vec<f32>;

    /// Mean of the block vectors over blocks that have tokens.
    fn encode(&self, blocks: &[Vec<u32>]) -> Embedding {
        let mut sum = vec![0.0f64; self.dim()];
        let mut n = 0usize;
        for block in blocks.iter().filter(|b| !b.is_empty()) {
            for (s, x) in sum.iter_mut().zip(self.encode_block(block)) {
                *s += f64::from(x);
            }
            n += 1;
        }
        if n == 0 {
            return Embedding { values: vec![0.0; self.dim()], empty: true };
        }
        Embedding { values: sum.iter().map(|s| (s / n as f64) as f32).collect(), empty: false }
    }
}

/// Vectors computed elsewhere, keyed by sequence id.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedVectors {
    dim: usize,
    table: BTreeMap<String, Vec<f32>>,
}

impl ImportedVectors {
    pub fn from_records(dim: usize, records: Vec<(String, Vec<f32>)>) -> Result<Self, EmbedError> {
        let mut table = BTreeMap::new();
        for (id, v) in records {
            if v.len() != dim {
                return Err(EmbedError::DimensionMismatch { expected: dim, found: v.len() });
            }
            table.insert(id, v);
        }
        Ok(ImportedVectors { dim, table })
    }

    pub fn from_vecfile(data: &[u8]) -> Result<Self, EmbedError> {
        let (dim, records) = vecfile::decode(data)?;
        Self::from_records(dim, records)
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.table.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    TfidfProjection(TfidfProjection),
    ParagraphVector(ParagraphVector),
    Imported(ImportedVectors),
}

const MAGIC: [u8; 4] = *b"EDAE";
const VERSION: u16 = 1;

impl Encoder {
    pub fn encoder_id(&self) -> String {
        match self {
            Encoder::TfidfProjection(e) => e.encoder_id(),
            Encoder::ParagraphVector(e) => e.encoder_id(),
            Encoder::Imported(t) => alloc::format!("imported-d{}", t.dim),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::TfidfProjection(e) => e.dim(),
            Encoder::ParagraphVector(e) => e.dim(),
            Encoder::Imported(t) => t.dim,
        }
    }

    pub fn native(&self) -> Option<&dyn SequenceEncoder> {
        match self {
            Encoder::TfidfProjection(e) => Some(e),
            Encoder::ParagraphVector(e) => Some(e),
            Encoder::Imported(_) => None,
        }
    }

    /// Embeds an indexed sequence. Imported tables look the id up.
    pub fn encode_sequence(&self, id: &str, blocks: &[Vec<u32>]) -> Result<Embedding, EmbedError> {
        match self {
            Encoder::Imported(t) => {
                let v = t.get(id).ok_or_else(|| EmbedError::UnknownSequence(id.into()))?;
                Ok(Embedding { values: v.to_vec(), empty: v.iter().all(|&x| x == 0.0) })
            }
            _ => self.encode_query(blocks),
        }
    }

    /// Embeds code that has no id.
    pub fn encode_query(&self, blocks: &[Vec<u32>]) -> Result<Embedding, EmbedError> {
        self.native().map(|e| e.encode(blocks)).ok_or(EmbedError::QueryUnsupported)
    }

    /// Native backends serialize to an `EDAE` file, imported tables to `EDAV`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Encoder::Imported(t) => {
                return vecfile::encode(t.dim, t.table.iter().map(|(id, v)| (id.as_str(), v.as_slice())));
            }
            Encoder::TfidfProjection(e) => {
                w.bytes(&MAGIC).u16(VERSION).u8(0);
                e.write(&mut w);
            }
            Encoder::ParagraphVector(e) => {
                w.bytes(&MAGIC).u16(VERSION).u8(1);
                e.write(&mut w);
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, EmbedError> {
        if data.starts_with(&vecfile::MAGIC) {
            return Ok(Encoder::Imported(ImportedVectors::from_vecfile(data)?));
        }
        let mut r = Reader::new(data);
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(DecodeError::UnsupportedVersion(version).into());
        }
        let enc = match r.u8()? {
            0 => Encoder::TfidfProjection(TfidfProjection::read(&mut r)?),
            1 => Encoder::ParagraphVector(ParagraphVector::read(&mut r)?),
            _ => return Err(DecodeError::Invalid("unknown encoder backend").into()),
        };
        r.expect_end()?;
        Ok(enc)
    }

    /// Fails unless the encoder produces `dim`-dimensional vectors.
    pub fn check_dim(&self, dim: usize) -> Result<(), EmbedError> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(EmbedError::DimensionMismatch { expected: dim, found: self.dim() })
        }
    }
}

/// FNV-1a over the little-endian bytes of `tokens`, mixed with `seed`.
pub(crate) fn hash_tokens(seed: u64, tokens: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for t in tokens {
        for b in t.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
