//! LDA and seeded (guided) LDA by collapsed Gibbs sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{DecodeError, Reader, Writer};
use crate::math::ln;
use crate::sequence::EdaType;

const MAGIC: [u8; 4] = *b"EDAT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TopicError {
    InvalidHyperparameter(&'static str),
    /// A token was seeded to two different topics.
    SeedConflict { token: u32 },
    /// A document refers to a token id outside the vocabulary.
    TokenOutOfRange { token: u32 },
}

impl core::error::Error for TopicError {}

impl fmt::Display for TopicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopicError::InvalidHyperparameter(what) => write!(f, "invalid hyperparameter: {what}"),
            TopicError::SeedConflict { token } => write!(f, "token {token} is seeded to more than one topic"),
            TopicError::TokenOutOfRange { token } => write!(f, "token id {token} is outside the vocabulary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl LdaParams {
    /// Conventional defaults: alpha = 50/K, beta = 0.01, 1000 sweeps.
    pub fn new(k: usize, rng_seed: u64) -> Self {
        LdaParams { k, alpha: 50.0 / k.max(1) as f64, beta: 0.01, iterations: 1000, rng_seed }
    }

    fn validate(&self, v: usize) -> Result<(), TopicError> {
        if self.k < 1 {
            return Err(TopicError::InvalidHyperparameter("K must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(TopicError::InvalidHyperparameter("alpha must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(TopicError::InvalidHyperparameter("beta must be positive"));
        }
        if self.iterations < 1 {
            return Err(TopicError::InvalidHyperparameter("iterations must be at least 1"));
        }
        if v < 1 {
            return Err(TopicError::InvalidHyperparameter("vocabulary is empty"));
        }
        Ok(())
    }
}

pub const DEFAULT_SEED_BOOST: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub v: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed_boost: f64,
    pub rng_seed: u64,
    /// Row-major K×V, p(token | topic).
    pub phi: Vec<f64>,
    /// Seed token ids per topic; empty lists for plain LDA.
    pub seeds: Vec<Vec<u32>>,
    /// EDA operation type of each topic.
    pub eda_types: Vec<EdaType>,
}

/// Side information from a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub skipped_empty_docs: usize,
    /// Final topic of every token, document by document (empty docs omitted).
    pub assignments: Vec<Vec<u16>>,
}

pub fn train_lda(docs: &[Vec<u32>], v: usize, params: &LdaParams) -> Result<(TopicModel, TrainReport), TopicError> {
    gibbs(docs, v, params, &[], 1.0)
}

/// LDA where each seeded token starts in its seed topic with probability
/// boost/(boost+K−1) and has its sampling weight for that topic multiplied
/// by `seed_boost`.
pub fn train_guided_lda(
    docs: &[Vec<u32>],
    v: usize,
    params: &LdaParams,
    seeds: &[Vec<u32>],
    seed_boost: f64,
) -> Result<(TopicModel, TrainReport), TopicError> {
    if !(seed_boost >= 1.0 && seed_boost.is_finite()) {
        return Err(TopicError::InvalidHyperparameter("seed_boost must be at least 1"));
    }
    if seeds.len() > params.k {
        return Err(TopicError::InvalidHyperparameter("more seed lists than topics"));
    }
    gibbs(docs, v, params, seeds, seed_boost)
}

fn gibbs(
    docs: &[Vec<u32>],
    v: usize,
    params: &LdaParams,
    seeds: &[Vec<u32>],
    seed_boost: f64,
) -> Result<(TopicModel, TrainReport), TopicError> {
    params.validate(v)?;
    let k = params.k;
    let mut seed_topic: Vec<Option<usize>> = vec![None; v];
    for (topic, list) in seeds.iter().enumerate() {
        for &t in list {
            let slot = seed_topic.get_mut(t as usize).ok_or(TopicError::TokenOutOfRange { token: t })?;
            match *slot {
                Some(prev) if prev != topic => return Err(TopicError::SeedConflict { token: t }),
                _ => *slot = Some(topic),
            }
        }
    }
    for doc in docs {
        if let Some(&t) = doc.iter().find(|&&t| t as usize >= v) {
            return Err(TopicError::TokenOutOfRange { token: t });
        }
    }

    let kept: Vec<&Vec<u32>> = docs.iter().filter(|d| !d.is_empty()).collect();
    let mut report = TrainReport { skipped_empty_docs: docs.len() - kept.len(), assignments: Vec::new() };

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut n_dk = vec![0u32; kept.len() * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<u16>> = Vec::with_capacity(kept.len());
    let mut weights = vec![0.0f64; k];

    for (d, doc) in kept.iter().enumerate() {
        let mut zd = Vec::with_capacity(doc.len());
        for &w in doc.iter() {
            let seeded = seed_topic[w as usize];
            for (topic, wt) in weights.iter_mut().enumerate() {
                *wt = if seeded == Some(topic) { seed_boost } else { 1.0 };
            }
            let topic = draw(&mut rng, &weights);
            n_dk[d * k + topic] += 1;
            n_kw[topic * v + w as usize] += 1;
            n_k[topic] += 1;
            zd.push(topic as u16);
        }
        z.push(zd);
    }

    let (alpha, beta) = (params.alpha, params.beta);
    let vbeta = v as f64 * beta;
    for _ in 0..params.iterations {
        for (d, doc) in kept.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[d][i] as usize;
                n_dk[d * k + old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;
                let seeded = seed_topic[w];
                for (topic, wt) in weights.iter_mut().enumerate() {
                    let mut p = (f64::from(n_dk[d * k + topic]) + alpha) * (f64::from(n_kw[topic * v + w]) + beta)
                        / (f64::from(n_k[topic]) + vbeta);
                    if seeded == Some(topic) {
                        p *= seed_boost;
                    }
                    *wt = p;
                }
                let new = draw(&mut rng, &weights);
                n_dk[d * k + new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
                z[d][i] = new as u16;
            }
        }
    }

    let mut phi = vec![0.0; k * v];
    for topic in 0..k {
        let denom = f64::from(n_k[topic]) + vbeta;
        for w in 0..v {
            phi[topic * v + w] = (f64::from(n_kw[topic * v + w]) + beta) / denom;
        }
    }
    let mut seed_lists = seeds.to_vec();
    seed_lists.resize(k, Vec::new());
    report.assignments = z;
    let model = TopicModel {
        k,
        v,
        alpha,
        beta,
        iterations: params.iterations,
        seed_boost,
        rng_seed: params.rng_seed,
        phi,
        seeds: seed_lists,
        eda_types: vec![EdaType::Unknown; k],
    };
    Ok((model, report))
}

/// One uniform draw scaled by the total weight, so that equal weight vectors
/// always consume the RNG identically.
fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl TopicModel {
    pub fn row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.v..(topic + 1) * self.v]
    }

    pub fn prob(&self, topic: usize, token: u32) -> f64 {
        self.phi[topic * self.v + token as usize]
    }

    /// The `n` most probable tokens of a topic, ties by ascending id.
    pub fn top_tokens(&self, topic: usize, n: usize) -> Vec<u32> {
        let row = self.row(topic);
        let mut ids: Vec<u32> = (0..self.v as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// Topic with the highest p(token | topic), lowest index on ties.
    pub fn argmax_topic(&self, token: u32) -> usize {
        let mut best = 0;
        for topic in 1..self.k {
            if self.prob(topic, token) > self.prob(best, token) {
                best = topic;
            }
        }
        best
    }

    /// Topic maximizing Σ ln p(t | topic) under a uniform prior. Tokens
    /// outside the vocabulary are ignored; `None` if nothing is left.
    pub fn most_likely_topic(&self, tokens: &[u32]) -> Option<usize> {
        let known: Vec<u32> = tokens.iter().copied().filter(|&t| (t as usize) < self.v).collect();
        if known.is_empty() {
            return None;
        }
        let score = |topic: usize| known.iter().map(|&t| ln(self.prob(topic, t))).sum::<f64>();
        let mut best = (0, score(0));
        for topic in 1..self.k {
            let s = score(topic);
            if s > best.1 {
                best = (topic, s);
            }
        }
        Some(best.0)
    }

    /// Document-topic proportions under fixed phi: the maximum-likelihood
    /// fixed point θ_k ← (1/N) Σ_t θ_k φ_kt / Σ_j θ_j φ_jt, started from
    /// uniform. Uniform for an empty document.
    pub fn infer_mixture(&self, doc: &[u32]) -> Vec<f64> {
        let k = self.k;
        let mut theta = vec![1.0 / k as f64; k];
        let tokens: Vec<u32> = doc.iter().copied().filter(|&t| (t as usize) < self.v).collect();
        if tokens.is_empty() {
            return theta;
        }
        let mut next = vec![0.0; k];
        for _ in 0..2000 {
            next.iter_mut().for_each(|x| *x = 0.0);
            for &t in &tokens {
                let denom: f64 = (0..k).map(|j| theta[j] * self.prob(j, t)).sum();
                for j in 0..k {
                    next[j] += theta[j] * self.prob(j, t) / denom;
                }
            }
            let total: f64 = next.iter().sum();
            let mut delta: f64 = 0.0;
            for j in 0..k {
                let x = next[j] / total;
                delta = delta.max((x - theta[j]).abs());
                theta[j] = x;
            }
            if delta < 1e-12 {
                break;
            }
        }
        theta
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&MAGIC).u16(VERSION).u32(self.k as u32).u32(self.v as u32);
        w.f64(self.alpha).f64(self.beta).u32(self.iterations as u32).f64(self.seed_boost).u64(self.rng_seed);
        for &p in &self.phi {
            w.f64(p);
        }
        for t in &self.eda_types {
            w.u8(t.to_byte());
        }
        for list in &self.seeds {
            w.u32(list.len() as u32);
            for &t in list {
                w.u32(t);
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(data);
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        let k = r.u32()? as usize;
        let v = r.u32()? as usize;
        if k == 0 || v == 0 {
            return Err(DecodeError::Invalid("empty topic matrix"));
        }
        let alpha = r.f64()?;
        let beta = r.f64()?;
        let iterations = r.u32()? as usize;
        let seed_boost = r.f64()?;
        let rng_seed = r.u64()?;
        let cells = k.checked_mul(v).ok_or(DecodeError::Invalid("topic matrix too large"))?;
        if r.remaining() < cells.saturating_mul(8) {
            return Err(DecodeError::Truncated);
        }
        let mut phi = Vec::with_capacity(cells);
        for _ in 0..cells {
            let p = r.f64()?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(DecodeError::Invalid("topic probabilities must be positive"));
            }
            phi.push(p);
        }
        let mut eda_types = Vec::with_capacity(k);
        for _ in 0..k {
            eda_types.push(EdaType::from_byte(r.u8()?).ok_or(DecodeError::Invalid("unknown EDA type byte"))?);
        }
        let mut seeds = Vec::with_capacity(k);
        for _ in 0..k {
            let n = r.u32()? as usize;
            let mut list = Vec::with_capacity(n.min(r.remaining() / 4));
            for _ in 0..n {
                let t = r.u32()?;
                if t as usize >= v {
                    return Err(DecodeError::Invalid("seed token outside the vocabulary"));
                }
                list.push(t);
            }
            seeds.push(list);
        }
        r.expect_end()?;
        Ok(TopicModel { k, v, alpha, beta, iterations, seed_boost, rng_seed, phi, seeds, eda_types })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planted;

    fn params(k: usize, iterations: usize, seed: u64) -> LdaParams {
        LdaParams { iterations, ..LdaParams::new(k, seed) }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let docs = vec![vec![0u32]];
        for p in [
            LdaParams { k: 0, ..LdaParams::new(1, 0) },
            LdaParams { alpha: 0.0, ..LdaParams::new(1, 0) },
            LdaParams { beta: -1.0, ..LdaParams::new(1, 0) },
            LdaParams { iterations: 0, ..LdaParams::new(1, 0) },
        ] {
            assert!(matches!(train_lda(&docs, 1, &p), Err(TopicError::InvalidHyperparameter(_))));
        }
        assert!(matches!(train_lda(&docs, 0, &LdaParams::new(1, 0)), Err(TopicError::InvalidHyperparameter(_))));
        assert_eq!(
            train_lda(&[vec![3]], 2, &LdaParams::new(1, 0)).unwrap_err(),
            TopicError::TokenOutOfRange { token: 3 }
        );
    }

    #[test]
    fn seed_conflict_is_reported() {
        let err = train_guided_lda(&[vec![0, 1]], 2, &params(2, 1, 0), &[vec![1], vec![1, 0]], 10.0).unwrap_err();
        assert_eq!(err, TopicError::SeedConflict { token: 1 });
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let docs = vec![vec![0, 0, 1], vec![2, 0], vec![]];
        let (m, report) = train_lda(&docs, 4, &params(1, 5, 3)).unwrap();
        assert_eq!(report.skipped_empty_docs, 1);
        let counts = [3.0, 1.0, 1.0, 0.0];
        for (w, c) in counts.iter().enumerate() {
            let want = (c + 0.01) / (5.0 + 4.0 * 0.01);
            assert!((m.prob(0, w as u32) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_distributions() {
        let corpus = planted::topic_corpus(&planted::TopicCorpusSpec { docs: 60, ..Default::default() });
        let (m, _) = train_lda(&corpus.docs, corpus.vocab_size, &params(4, 20, 1)).unwrap();
        for topic in 0..m.k {
            let s: f64 = m.row(topic).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(m.row(topic).iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let corpus = planted::topic_corpus(&planted::TopicCorpusSpec { docs: 40, ..Default::default() });
        let a = train_lda(&corpus.docs, corpus.vocab_size, &params(4, 10, 9)).unwrap().0;
        let b = train_lda(&corpus.docs, corpus.vocab_size, &params(4, 10, 9)).unwrap().0;
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = train_lda(&corpus.docs, corpus.vocab_size, &params(4, 10, 10)).unwrap().0;
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn neutral_boost_reproduces_plain_lda() {
        let corpus = planted::topic_corpus(&planted::TopicCorpusSpec { docs: 50, ..Default::default() });
        let p = params(4, 15, 4);
        let (plain, r1) = train_lda(&corpus.docs, corpus.vocab_size, &p).unwrap();
        let (guided, r2) = train_guided_lda(&corpus.docs, corpus.vocab_size, &p, &corpus.seeds(5), 1.0).unwrap();
        assert_eq!(r1.assignments, r2.assignments);
        assert_eq!(plain.phi, guided.phi);
    }

    #[test]
    fn two_planted_topics_are_recovered() {
        let spec = planted::TopicCorpusSpec { docs: 200, topics: 2, vocab: 60, ..Default::default() };
        let corpus = planted::topic_corpus(&spec);
        let (m, _) = train_lda(&corpus.docs, corpus.vocab_size, &params(2, 200, 11)).unwrap();
        let overlaps = planted::aligned_top_overlap(&m, &corpus, 10);
        for o in overlaps {
            assert!(o >= 8, "overlap {o}/10");
        }
    }

    #[test]
    fn seeds_win_their_topics() {
        let corpus = planted::topic_corpus(&planted::TopicCorpusSpec { docs: 200, ..Default::default() });
        let seeds = corpus.seeds(5);
        let (m, _) = train_guided_lda(&corpus.docs, corpus.vocab_size, &params(4, 150, 7), &seeds, 10.0).unwrap();
        for (topic, list) in seeds.iter().enumerate() {
            for &t in list {
                assert_eq!(m.argmax_topic(t), topic);
            }
        }
    }

    #[test]
    fn mixture_properties() {
        let model = planted::planted_model(4, 40);
        let own: Vec<u32> = model.top_tokens(2, 5);
        let mix = model.infer_mixture(&own);
        assert!(mix[2] >= 0.9, "{mix:?}");
        assert!((mix.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        assert_eq!(model.infer_mixture(&[]), vec![0.25; 4]);

        let doc: Vec<u32> = vec![0, 11, 12, 25, 33, 3];
        let twice: Vec<u32> = doc.iter().chain(doc.iter()).copied().collect();
        let (a, b) = (model.infer_mixture(&doc), model.infer_mixture(&twice));
        for j in 0..4 {
            assert!((a[j] - b[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn classification_uses_log_likelihood() {
        let model = planted::planted_model(4, 40);
        assert_eq!(model.most_likely_topic(&model.top_tokens(3, 4)), Some(3));
        assert_eq!(model.most_likely_topic(&[]), None);
        assert_eq!(model.most_likely_topic(&[9999]), None);
    }

    #[test]
    fn binary_round_trip_and_errors() {
        let corpus = planted::topic_corpus(&planted::TopicCorpusSpec { docs: 30, ..Default::default() });
        let (mut m, _) =
            train_guided_lda(&corpus.docs, corpus.vocab_size, &params(4, 5, 2), &corpus.seeds(2), 10.0).unwrap();
        m.eda_types = EdaType::ALL.to_vec();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"EDAT");
        assert_eq!(TopicModel::from_bytes(&bytes).unwrap(), m);
        assert_eq!(TopicModel::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err(), DecodeError::Truncated);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(TopicModel::from_bytes(&bad), Err(DecodeError::BadMagic { .. })));
        let mut newer = bytes;
        newer[4] = 9;
        assert_eq!(TopicModel::from_bytes(&newer).unwrap_err(), DecodeError::UnsupportedVersion(9));
    }
}
