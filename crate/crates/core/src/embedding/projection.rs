use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbedError, SequenceEncoder};
use crate::codec::{DecodeError, Reader, Writer};
use crate::math::{ln, sqrt};

/// TF-IDF weighted token counts multiplied by a seeded random ±1/√D
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfProjection {
    v: usize,
    dim: usize,
    rng_seed: u64,
    n_docs: u64,
    df: Vec<u32>,
    matrix: Vec<f32>,
}

impl TfidfProjection {
    /// `docs` are the documents document frequency is counted over (one per
    /// sequence); ids must be below `v`.
    pub fn fit(docs: &[Vec<u32>], v: usize, dim: usize, rng_seed: u64) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::InvalidHyperparameter("dimension must be positive"));
        }
        let mut df = vec![0u32; v];
        for doc in docs {
            let mut distinct: Vec<u32> = doc.iter().copied().filter(|&t| (t as usize) < v).collect();
            distinct.sort_unstable();
            distinct.dedup();
            for t in distinct {
                df[t as usize] += 1;
            }
        }
        Ok(Self::with_stats(v, dim, rng_seed, docs.len() as u64, df))
    }

    fn with_stats(v: usize, dim: usize, rng_seed: u64, n_docs: u64, df: Vec<u32>) -> Self {
        TfidfProjection { v, dim, rng_seed, n_docs, df, matrix: projection_matrix(v, dim, rng_seed) }
    }

    /// ln((1+N)/(1+df)) + 1; the constant keeps tokens present in every
    /// document from vanishing.
    pub fn weight(&self, token: u32) -> f64 {
        let df = f64::from(self.df[token as usize]);
        ln((1.0 + self.n_docs as f64) / (1.0 + df)) + 1.0
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub(super) fn write(&self, w: &mut Writer) {
        w.u32(self.v as u32).u32(self.dim as u32).u64(self.rng_seed).u64(self.n_docs);
        for &d in &self.df {
            w.u32(d);
        }
    }

    pub(super) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let v = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let rng_seed = r.u64()?;
        let n_docs = r.u64()?;
        if dim == 0 {
            return Err(DecodeError::Invalid("zero dimension"));
        }
        if r.remaining() < v.saturating_mul(4) {
            return Err(DecodeError::Truncated);
        }
        let mut df = Vec::with_capacity(v);
        for _ in 0..v {
            let d = r.u32()?;
            if u64::from(d) > n_docs {
                return Err(DecodeError::Invalid("document frequency exceeds document count"));
            }
            df.push(d);
        }
        Ok(Self::with_stats(v, dim, rng_seed, n_docs, df))
    }
}

fn projection_matrix(v: usize, dim: usize, rng_seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = (1.0 / sqrt(dim as f64)) as f32;
    (0..v * dim).map(|_| if rng.next_u32() & 1 == 0 { scale } else { -scale }).collect()
}

impl SequenceEncoder for TfidfProjection {
    fn encoder_id(&self) -> String {
        alloc::format!("tfidf-projection-d{}-s{}", self.dim, self.rng_seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Tokens outside the fitted vocabulary are ignored.
    fn encode_block(&self, tokens: &[u32]) -> Vec<f32> {
        let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
        for &t in tokens.iter().filter(|&&t| (t as usize) < self.v) {
            *tf.entry(t).or_insert(0) += 1;
        }
        let mut out = vec![0.0f64; self.dim];
        for (t, count) in tf {
            let w = f64::from(count) * self.weight(t);
            let row = &self.matrix[t as usize * self.dim..(t as usize + 1) * self.dim];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += w * f64::from(m);
            }
        }
        out.into_iter().map(|x| x as f32).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Encoder;
    use crate::math::cosine;
    use proptest::prelude::*;

    fn background() -> Vec<Vec<u32>> {
        (0..50u32).map(|i| (0..8).map(|j| (i * 7 + j * 13) % 100).collect()).collect()
    }

    fn encoder(seed: u64) -> TfidfProjection {
        TfidfProjection::fit(&background(), 100, 128, seed).unwrap()
    }

    #[test]
    fn near_duplicates_beat_disjoint_sets() {
        let e = encoder(3);
        let base: Vec<u32> = (0..10).collect();
        let mut near = base.clone();
        near[9] = 50;
        let disjoint: Vec<u32> = (20..30).collect();
        let close = cosine(&e.encode(std::slice::from_ref(&base)).values, &e.encode(&[near]).values);
        let far = cosine(&e.encode(&[base]).values, &e.encode(&[disjoint]).values);
        assert!(close > far, "{close} vs {far}");
        assert!(close > 0.7);
    }

    #[test]
    fn empty_sequence_is_zero_and_flagged() {
        let e = encoder(3).encode(&[]);
        assert!(e.empty);
        assert!(e.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn seeded_matrix() {
        assert_eq!(encoder(1).encode_block(&[1, 2, 2]), encoder(1).encode_block(&[1, 2, 2]));
        assert_ne!(encoder(1).encode_block(&[1, 2, 2]), encoder(2).encode_block(&[1, 2, 2]));
        let m = encoder(1);
        assert!(m.matrix.iter().all(|&x| (x.abs() - 1.0 / 128f32.sqrt()).abs() < 1e-7));
    }

    #[test]
    fn unseen_tokens_are_ignored() {
        let e = encoder(1);
        assert_eq!(e.encode_block(&[4, 999]), e.encode_block(&[4]));
    }

    #[test]
    fn serialization_round_trip() {
        let enc = Encoder::TfidfProjection(encoder(9));
        let back = Encoder::from_bytes(&enc.to_bytes()).unwrap();
        assert_eq!(back, enc);
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(TfidfProjection::fit(&background(), 100, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn duplication_keeps_direction(tokens in proptest::collection::vec(0u32..100, 1..20), k in 2usize..5) {
            let e = encoder(4);
            let once = e.encode(std::slice::from_ref(&tokens));
            let many: Vec<u32> = (0..k).flat_map(|_| tokens.iter().copied()).collect();
            let c = cosine(&once.values, &e.encode(&[many]).values);
            prop_assert!((c - 1.0).abs() < 1e-6);
        }
    }
}
