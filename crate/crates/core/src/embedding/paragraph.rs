//! PV-DBOW paragraph vectors trained with negative sampling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{hash_tokens, EmbedError, SequenceEncoder};
use crate::codec::{DecodeError, Reader, Writer};
use crate::math::{log_sigmoid, powf, sigmoid};

#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphParams {
    pub dim: usize,
    pub epochs: usize,
    pub negative: usize,
    pub learning_rate: f64,
    /// Passes over a block when inferring its vector.
    pub infer_epochs: usize,
    pub rng_seed: u64,
}

impl Default for ParagraphParams {
    fn default() -> Self {
        ParagraphParams { dim: super::DEFAULT_DIM, epochs: 50, negative: 5, learning_rate: 0.05, infer_epochs: 100, rng_seed: 0 }
    }
}

impl ParagraphParams {
    fn validate(&self) -> Result<(), EmbedError> {
        let bad = |what| Err(EmbedError::InvalidHyperparameter(what));
        if self.dim == 0 {
            return bad("dimension must be positive");
        }
        if self.epochs == 0 || self.infer_epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.negative == 0 {
            return bad("at least one negative sample is needed");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Word output vectors of a trained model. Every block vector, seen in
/// training or not, is inferred against these frozen weights, so encoding
/// is a pure function of the block tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphVector {
    v: usize,
    params: ParagraphParams,
    counts: Vec<u64>,
    word: Vec<f32>,
    noise_cdf: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Mean negative-sampling loss per predicted token, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    /// Document vectors learned jointly with the word vectors.
    pub doc_vectors: Vec<Vec<f32>>,
}

impl ParagraphVector {
    pub fn train(corpus: &[Vec<u32>], v: usize, params: &ParagraphParams) -> Result<(Self, TrainLog), EmbedError> {
        params.validate()?;
        if corpus.iter().all(|d| d.is_empty()) {
            return Err(EmbedError::InvalidHyperparameter("corpus has no tokens"));
        }
        let mut counts = vec![0u64; v];
        for &t in corpus.iter().flatten() {
            let slot = counts.get_mut(t as usize).ok_or(EmbedError::InvalidHyperparameter("token outside vocabulary"))?;
            *slot += 1;
        }
        let dim = params.dim;
        let mut model =
            ParagraphVector { v, params: params.clone(), noise_cdf: noise_cdf(&counts), counts, word: vec![0.0; v * dim] };

        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        let mut docs: Vec<Vec<f32>> = corpus
            .iter()
            .map(|_| (0..dim).map(|_| (rng.gen::<f32>() - 0.5) / dim as f32).collect())
            .collect();
        let total = (corpus.iter().map(Vec::len).sum::<usize>() * params.epochs) as f64;
        let mut done = 0usize;
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut log = TrainLog::default();
        let mut grad = vec![0.0f32; dim];
        for _ in 0..params.epochs {
            shuffle(&mut order, &mut rng);
            let (mut loss, mut n) = (0.0, 0usize);
            for &d in &order {
                for &t in &corpus[d] {
                    let lr = params.learning_rate * (1.0 - done as f64 / total).max(1e-4);
                    loss += model.step(&mut docs[d], t, lr, &mut rng, &mut grad);
                    n += 1;
                    done += 1;
                }
            }
            log.epoch_loss.push(loss / n.max(1) as f64);
        }
        log.doc_vectors = docs;
        Ok((model, log))
    }

    /// One positive and `negative` noise predictions for `target`, updating
    /// the doc vector and the word vectors. Returns the loss before the
    /// update.
    fn step(&mut self, doc: &mut [f32], target: u32, lr: f64, rng: &mut ChaCha8Rng, grad: &mut [f32]) -> f64 {
        let dim = self.params.dim;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for s in 0..=self.params.negative {
            let (word, label) = if s == 0 {
                (target, 1.0)
            } else {
                let w = self.sample_noise(rng);
                if w == target {
                    continue;
                }
                (w, 0.0)
            };
            let row = &mut self.word[word as usize * dim..(word as usize + 1) * dim];
            let score: f64 = doc.iter().zip(row.iter()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
            loss -= if label == 1.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
            let g = ((label - sigmoid(score)) * lr) as f32;
            for i in 0..dim {
                grad[i] += g * row[i];
                row[i] += g * doc[i];
            }
        }
        for (d, g) in doc.iter_mut().zip(grad.iter()) {
            *d += g;
        }
        loss
    }

    fn sample_noise(&self, rng: &mut ChaCha8Rng) -> u32 {
        let u: f64 = rng.gen();
        self.noise_cdf.partition_point(|&c| c <= u).min(self.v - 1) as u32
    }

    /// Block vector with word vectors frozen, started from a point seeded by
    /// the block content.
    pub fn infer(&self, tokens: &[u32]) -> Vec<f32> {
        let dim = self.params.dim;
        let known: Vec<u32> = tokens.iter().copied().filter(|&t| (t as usize) < self.v && self.counts[t as usize] > 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hash_tokens(self.params.rng_seed, &known));
        let mut doc: Vec<f32> = (0..dim).map(|_| (rng.gen::<f32>() - 0.5) / dim as f32).collect();
        if known.is_empty() {
            return vec![0.0; dim];
        }
        let total = (known.len() * self.params.infer_epochs) as f64;
        let mut grad = vec![0.0f32; dim];
        let mut done = 0usize;
        for _ in 0..self.params.infer_epochs {
            for &t in &known {
                let lr = self.params.learning_rate * (1.0 - done as f64 / total).max(1e-4);
                grad.iter_mut().for_each(|g| *g = 0.0);
                for s in 0..=self.params.negative {
                    let (word, label) = if s == 0 { (t, 1.0) } else { (self.sample_noise(&mut rng), 0.0) };
                    if s > 0 && word == t {
                        continue;
                    }
                    let row = &self.word[word as usize * dim..(word as usize + 1) * dim];
                    let score: f64 = doc.iter().zip(row).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
                    let g = ((label - sigmoid(score)) * lr) as f32;
                    for (acc, &w) in grad.iter_mut().zip(row) {
                        *acc += g * w;
                    }
                }
                for (d, g) in doc.iter_mut().zip(&grad) {
                    *d += g;
                }
                done += 1;
            }
        }
        doc
    }

    pub fn params(&self) -> &ParagraphParams {
        &self.params
    }

    pub(super) fn write(&self, w: &mut Writer) {
        let p = &self.params;
        w.u32(self.v as u32).u32(p.dim as u32).u32(p.epochs as u32).u32(p.negative as u32);
        w.f64(p.learning_rate).u32(p.infer_epochs as u32).u64(p.rng_seed);
        for &c in &self.counts {
            w.u64(c);
        }
        for &x in &self.word {
            w.f32(x);
        }
    }

    pub(super) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let v = r.u32()? as usize;
        let params = ParagraphParams {
            dim: r.u32()? as usize,
            epochs: r.u32()? as usize,
            negative: r.u32()? as usize,
            learning_rate: r.f64()?,
            infer_epochs: r.u32()? as usize,
            rng_seed: r.u64()?,
        };
        params.validate().map_err(|_| DecodeError::Invalid("bad paragraph-vector parameters"))?;
        if v == 0 {
            return Err(DecodeError::Invalid("empty vocabulary"));
        }
        let cells = v.checked_mul(params.dim).ok_or(DecodeError::Invalid("weights too large"))?;
        if r.remaining() < v.saturating_mul(8).saturating_add(cells.saturating_mul(4)) {
            return Err(DecodeError::Truncated);
        }
        let counts: Vec<u64> = (0..v).map(|_| r.u64()).collect::<Result<_, _>>()?;
        if counts.iter().all(|&c| c == 0) {
            return Err(DecodeError::Invalid("no token counts"));
        }
        let mut word = Vec::with_capacity(cells);
        for _ in 0..cells {
            let x = r.f32()?;
            if !x.is_finite() {
                return Err(DecodeError::Invalid("non-finite weight"));
            }
            word.push(x);
        }
        Ok(ParagraphVector { v, params, noise_cdf: noise_cdf(&counts), counts, word })
    }
}

/// Cumulative unigram^0.75 distribution.
fn noise_cdf(counts: &[u64]) -> Vec<f64> {
    let weights: Vec<f64> = counts.iter().map(|&c| powf(c as f64, 0.75)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn shuffle(items: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

impl SequenceEncoder for ParagraphVector {
    fn encoder_id(&self) -> String {
        alloc::format!("paragraph-vector-d{}-s{}", self.params.dim, self.params.rng_seed)
    }

    fn dim(&self) -> usize {
        self.params.dim
    }

    fn encode_block(&self, tokens: &[u32]) -> Vec<f32> {
        self.infer(tokens)
    }
}
