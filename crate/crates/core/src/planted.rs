//! Synthetic corpora with known structure, used as test oracles.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::max_weight_assignment;
use crate::sequence::EdaType;
use crate::topic::TopicModel;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpusSpec {
    pub docs: usize,
    pub topics: usize,
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Share of a document's tokens drawn from its dominant topic; the rest
    /// come from uniformly chosen topics.
    pub purity: f64,
    pub rng_seed: u64,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        TopicCorpusSpec { docs: 400, topics: 4, vocab: 200, min_len: 30, max_len: 60, purity: 0.8, rng_seed: 7 }
    }
}

/// Documents over a vocabulary split into one disjoint block per topic.
/// Inside a block word `r` has Zipf weight 1/(r+1), so the first words of a
/// block are the topic's most salient.
#[derive(Debug, Clone)]
pub struct TopicCorpus {
    pub docs: Vec<Vec<u32>>,
    pub vocab_size: usize,
    /// Planted p(word | topic), row-major topics × vocab.
    pub phi: Vec<Vec<f64>>,
    pub dominant: Vec<usize>,
}

impl TopicCorpus {
    /// The `n` highest-weight words of each planted topic.
    pub fn seeds(&self, n: usize) -> Vec<Vec<u32>> {
        (0..self.phi.len()).map(|k| self.top_words(k, n)).collect()
    }

    pub fn top_words(&self, topic: usize, n: usize) -> Vec<u32> {
        let row = &self.phi[topic];
        let mut ids: Vec<u32> = (0..self.vocab_size as u32).filter(|&w| row[w as usize] > 0.0).collect();
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }
}

pub fn topic_corpus(spec: &TopicCorpusSpec) -> TopicCorpus {
    let k = spec.topics.max(1);
    let block = spec.vocab / k;
    let mut phi = vec![vec![0.0; spec.vocab]; k];
    let mut cumulative = Vec::with_capacity(k);
    for (topic, row) in phi.iter_mut().enumerate() {
        let weights: Vec<f64> = (0..block).map(|r| 1.0 / (r + 1) as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cum = Vec::with_capacity(block);
        for (r, w) in weights.iter().enumerate() {
            row[topic * block + r] = w / total;
            acc += w / total;
            cum.push(acc);
        }
        cumulative.push(cum);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut docs = Vec::with_capacity(spec.docs);
    let mut dominant = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let main = d % k;
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let doc = (0..len)
            .map(|_| {
                let topic = if rng.gen::<f64>() < spec.purity { main } else { rng.gen_range(0..k) };
                let u: f64 = rng.gen();
                let r = cumulative[topic].partition_point(|&c| c <= u).min(block - 1);
                (topic * block + r) as u32
            })
            .collect();
        docs.push(doc);
        dominant.push(main);
    }
    TopicCorpus { docs, vocab_size: spec.vocab, phi, dominant }
}

/// Per planted topic, how many of its top-`n` words appear among the top-`n`
/// of the learned topic it is matched to (matching maximizes total overlap).
pub fn aligned_top_overlap(model: &TopicModel, corpus: &TopicCorpus, n: usize) -> Vec<usize> {
    let planted: Vec<Vec<u32>> = (0..corpus.phi.len()).map(|k| corpus.top_words(k, n)).collect();
    let learned: Vec<Vec<u32>> = (0..model.k).map(|k| model.top_tokens(k, n)).collect();
    let overlap: Vec<Vec<f64>> = planted
        .iter()
        .map(|p| learned.iter().map(|l| p.iter().filter(|w| l.contains(w)).count() as f64).collect())
        .collect();
    max_weight_assignment(&overlap)
        .iter()
        .enumerate()
        .map(|(i, m)| m.map_or(0, |j| overlap[i][j] as usize))
        .collect()
}

/// A hand-built model over `v` words in `k` equal blocks: each topic puts
/// 97% of its mass uniformly on its own block.
pub fn planted_model(k: usize, v: usize) -> TopicModel {
    let block = v / k;
    let mut phi = vec![0.0; k * v];
    for topic in 0..k {
        let outside = v - block;
        for w in 0..v {
            let own = w / block == topic;
            phi[topic * v + w] = if own { 0.97 / block as f64 } else { 0.03 / outside as f64 };
        }
    }
    let eda_types = if k == 4 { EdaType::ALL.to_vec() } else { vec![EdaType::Unknown; k] };
    TopicModel {
        k,
        v,
        alpha: 50.0 / k as f64,
        beta: 0.01,
        iterations: 0,
        seed_boost: 1.0,
        rng_seed: 0,
        phi,
        seeds: vec![Vec::new(); k],
        eda_types,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let c = topic_corpus(&TopicCorpusSpec::default());
        assert_eq!(c.docs.len(), 400);
        assert!(c.docs.iter().all(|d| (30..=60).contains(&d.len()) && d.iter().all(|&w| w < 200)));
        for row in &c.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(c.seeds(5)[1], [50, 51, 52, 53, 54]);
    }

    #[test]
    fn generation_is_seeded() {
        let a = topic_corpus(&TopicCorpusSpec::default());
        let b = topic_corpus(&TopicCorpusSpec::default());
        assert_eq!(a.docs, b.docs);
        let c = topic_corpus(&TopicCorpusSpec { rng_seed: 8, ..Default::default() });
        assert_ne!(a.docs, c.docs);
    }

    #[test]
    fn planted_model_rows_sum_to_one() {
        let m = planted_model(4, 40);
        for k in 0..4 {
            assert!((m.row(k).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
