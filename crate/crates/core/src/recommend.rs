//! Next-API recommendation: a multi-label linear head over frozen sequence
//! embeddings, and a retrieval baseline that pools the next blocks of the
//! nearest indexed sequences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{DecodeError, Reader, Writer};
use crate::embedding::SequenceEncoder;
use crate::index::SequenceIndex;
use crate::math::{ln, normalized, sigmoid};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum RecommendError {
    InvalidHyperparameter(&'static str),
    DimensionMismatch { expected: usize, found: usize },
    EmptyQuery,
    InvalidLimit,
}

impl core::error::Error for RecommendError {}

impl fmt::Display for RecommendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecommendError::InvalidHyperparameter(what) => write!(f, "invalid hyperparameter: {what}"),
            RecommendError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            RecommendError::EmptyQuery => f.write_str("no API calls found in the query"),
            RecommendError::InvalidLimit => f.write_str("limit must be at least 1"),
        }
    }
}

/// What counts as the ground truth after a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    /// Tokens of the block right after the prefix.
    #[default]
    NextBlock,
    /// Tokens of every block after the prefix.
    Remaining,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub sequence_id: String,
    pub prefix: Vec<Vec<u32>>,
    /// Sorted, distinct.
    pub target: Vec<u32>,
}

/// One pair per prefix length 1..N−1; pairs whose target is empty are
/// dropped.
pub fn make_training_pairs(sequences: &[(String, Vec<Vec<u32>>)], mode: TargetMode) -> Vec<Pair> {
    let mut out = Vec::new();
    for (id, blocks) in sequences {
        for n in 1..blocks.len() {
            let rest = match mode {
                TargetMode::NextBlock => &blocks[n..=n],
                TargetMode::Remaining => &blocks[n..],
            };
            let target: BTreeSet<u32> = rest.iter().flatten().copied().collect();
            if target.is_empty() {
                continue;
            }
            out.push(Pair { sequence_id: id.clone(), prefix: blocks[..n].to_vec(), target: target.into_iter().collect() });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
}

impl Default for HeadParams {
    fn default() -> Self {
        HeadParams { epochs: 30, learning_rate: 0.5, rng_seed: 0 }
    }
}

/// Independent sigmoid per vocabulary token over the unit-normalized
/// prefix embedding. Zero-initialized, so an untrained head says 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub v: usize,
    pub dim: usize,
    pub params: HeadParams,
    /// Row-major V×D.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn untrained(v: usize, dim: usize, params: HeadParams) -> Self {
        LinearHead { v, dim, params, weights: vec![0.0; v * dim], bias: vec![0.0; v] }
    }

    pub fn probabilities(&self, x: &[f32]) -> Vec<f64> {
        (0..self.v)
            .map(|t| {
                let row = &self.weights[t * self.dim..(t + 1) * self.dim];
                let z: f64 = self.bias[t] + row.iter().zip(x).map(|(w, &xi)| w * f64::from(xi)).sum::<f64>();
                sigmoid(z)
            })
            .collect()
    }
}

/// Embeds a prefix the way the head sees it.
fn features(encoder: &dyn SequenceEncoder, prefix: &[Vec<u32>]) -> Vec<f32> {
    normalized(&encoder.encode(prefix).values)
}

/// SGD on summed binary cross-entropy, one pair at a time in a seeded
/// shuffled order. Returns the model and the mean per-pair loss of each
/// epoch.
pub fn train_linear_head(
    pairs: &[Pair],
    encoder: &dyn SequenceEncoder,
    v: usize,
    params: &HeadParams,
) -> Result<(LinearHead, Vec<f64>), RecommendError> {
    if pairs.is_empty() {
        return Err(RecommendError::InvalidHyperparameter("no training pairs"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(RecommendError::InvalidHyperparameter("learning rate must be positive"));
    }
    if pairs.iter().flat_map(|p| &p.target).any(|&t| t as usize >= v) {
        return Err(RecommendError::InvalidHyperparameter("target token outside vocabulary"));
    }
    let dim = encoder.dim();
    let mut head = LinearHead::untrained(v, dim, params.clone());
    let xs: Vec<Vec<f32>> = pairs.iter().map(|p| features(encoder, &p.prefix)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut losses = Vec::with_capacity(params.epochs);
    let mut y = vec![0.0f64; v];
    for _ in 0..params.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut total = 0.0;
        for &i in &order {
            y.iter_mut().for_each(|x| *x = 0.0);
            for &t in &pairs[i].target {
                y[t as usize] = 1.0;
            }
            let x = &xs[i];
            let p = head.probabilities(x);
            for t in 0..v {
                let pt = p[t].clamp(1e-12, 1.0 - 1e-12);
                total -= y[t] * ln(pt) + (1.0 - y[t]) * ln(1.0 - pt);
                let g = params.learning_rate * (p[t] - y[t]);
                head.bias[t] -= g;
                let row = &mut head.weights[t * dim..(t + 1) * dim];
                for (w, &xi) in row.iter_mut().zip(x) {
                    *w -= g * f64::from(xi);
                }
            }
        }
        losses.push(total / pairs.len() as f64);
    }
    Ok((head, losses))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecommenderKind {
    LinearHead(LinearHead),
    /// Pools the next blocks of this many nearest indexed sequences.
    RetrievalBased { neighbors: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommenderModel {
    pub kind: RecommenderKind,
    pub threshold: f64,
    pub dim: usize,
    pub v: usize,
}

/// What a recommender may consult besides the query.
pub struct RecommendContext<'a> {
    pub encoder: &'a dyn SequenceEncoder,
    pub index: &'a SequenceIndex,
    /// Token ids per block of every indexed sequence.
    pub blocks: &'a BTreeMap<String, Vec<Vec<u32>>>,
}

const MAGIC: [u8; 4] = *b"EDAR";
const VERSION: u16 = 1;

impl RecommenderModel {
    pub fn linear(head: LinearHead, threshold: f64) -> Self {
        RecommenderModel { dim: head.dim, v: head.v, kind: RecommenderKind::LinearHead(head), threshold }
    }

    pub fn retrieval(neighbors: usize, dim: usize, v: usize, threshold: f64) -> Self {
        RecommenderModel { kind: RecommenderKind::RetrievalBased { neighbors }, threshold, dim, v }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RecommenderKind::LinearHead(_) => "linear-head",
            RecommenderKind::RetrievalBased { .. } => "retrieval",
        }
    }

    /// Probability of every token worth mentioning, by token id.
    pub fn predict(&self, ctx: &RecommendContext<'_>, prefix: &[Vec<u32>]) -> Result<BTreeMap<u32, f64>, RecommendError> {
        if ctx.encoder.dim() != self.dim {
            return Err(RecommendError::DimensionMismatch { expected: self.dim, found: ctx.encoder.dim() });
        }
        match &self.kind {
            RecommenderKind::LinearHead(head) => {
                let x = features(ctx.encoder, prefix);
                Ok(head.probabilities(&x).into_iter().enumerate().map(|(t, p)| (t as u32, p)).collect())
            }
            RecommenderKind::RetrievalBased { neighbors } => Ok(retrieval_votes(ctx, prefix, *neighbors)),
        }
    }

    /// Highest-probability tokens first, ties by id, at most `limit`.
    pub fn recommend(
        &self,
        ctx: &RecommendContext<'_>,
        prefix: &[Vec<u32>],
        limit: usize,
    ) -> Result<Vec<(u32, f64)>, RecommendError> {
        if limit == 0 {
            return Err(RecommendError::InvalidLimit);
        }
        if prefix.iter().all(Vec::is_empty) {
            return Err(RecommendError::EmptyQuery);
        }
        let mut ranked: Vec<(u32, f64)> = self.predict(ctx, prefix)?.into_iter().filter(|&(_, p)| p > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(limit);
        Ok(ranked)
    }

    pub fn predicted_set(&self, ctx: &RecommendContext<'_>, prefix: &[Vec<u32>]) -> Result<Vec<u32>, RecommendError> {
        Ok(self.predict(ctx, prefix)?.into_iter().filter(|&(_, p)| p > self.threshold).map(|(t, _)| t).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&MAGIC).u16(VERSION);
        match &self.kind {
            RecommenderKind::RetrievalBased { neighbors } => {
                w.u8(0).f64(self.threshold).u32(self.dim as u32).u32(self.v as u32).u32(*neighbors as u32);
            }
            RecommenderKind::LinearHead(h) => {
                w.u8(1).f64(self.threshold).u32(self.dim as u32).u32(self.v as u32);
                w.u32(h.params.epochs as u32).f64(h.params.learning_rate).u64(h.params.rng_seed);
                for &x in h.weights.iter().chain(&h.bias) {
                    w.f64(x);
                }
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
        let kind = r.u8()?;
        let threshold = r.f64()?;
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(DecodeError::Invalid("threshold outside (0, 1)"));
        }
        let dim = r.u32()? as usize;
        let v = r.u32()? as usize;
        let model = match kind {
            0 => RecommenderModel::retrieval(r.u32()? as usize, dim, v, threshold),
            1 => {
                let params = HeadParams { epochs: r.u32()? as usize, learning_rate: r.f64()?, rng_seed: r.u64()? };
                let cells = v.checked_mul(dim).ok_or(DecodeError::Invalid("weights too large"))?;
                if r.remaining() < (cells + v).saturating_mul(8) {
                    return Err(DecodeError::Truncated);
                }
                let mut read = |n: usize| -> Result<Vec<f64>, DecodeError> {
                    (0..n)
                        .map(|_| {
                            let x = r.f64()?;
                            if x.is_finite() { Ok(x) } else { Err(DecodeError::Invalid("non-finite weight")) }
                        })
                        .collect()
                };
                let weights = read(cells)?;
                let bias = read(v)?;
                RecommenderModel::linear(LinearHead { v, dim, params, weights, bias }, threshold)
            }
            _ => return Err(DecodeError::Invalid("unknown recommender kind")),
        };
        r.expect_end()?;
        Ok(model)
    }
}

fn jaccard(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Similarity-weighted votes from the nearest sequences that have a block
/// after their best-aligned prefix. Weights are clamped at zero; if all are
/// zero every neighbor counts equally.
fn retrieval_votes(ctx: &RecommendContext<'_>, prefix: &[Vec<u32>], neighbors: usize) -> BTreeMap<u32, f64> {
    let q = ctx.encoder.encode(prefix).values;
    let query_set: BTreeSet<u32> = prefix.iter().flatten().copied().collect();
    let scores = ctx.index.scores(&q);
    let mut order: Vec<usize> = (0..ctx.index.entries.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut picked: Vec<(f64, BTreeSet<u32>)> = Vec::new();
    for i in order {
        if picked.len() == neighbors {
            break;
        }
        let Some(blocks) = ctx.blocks.get(&ctx.index.entries[i].meta.id) else { continue };
        if blocks.len() < 2 {
            continue;
        }
        let mut best = (f64::NEG_INFINITY, 1);
        let mut seen = BTreeSet::new();
        for n in 1..blocks.len() {
            seen.extend(blocks[n - 1].iter().copied());
            let j = jaccard(&query_set, &seen);
            if j > best.0 {
                best = (j, n);
            }
        }
        let next: BTreeSet<u32> = blocks[best.1].iter().copied().collect();
        picked.push((scores[i].max(0.0), next));
    }
    let mut total: f64 = picked.iter().map(|(w, _)| w).sum();
    if total == 0.0 {
        picked.iter_mut().for_each(|(w, _)| *w = 1.0);
        total = picked.len() as f64;
    }
    let mut votes: BTreeMap<u32, f64> = BTreeMap::new();
    for (w, next) in &picked {
        for &t in next {
            *votes.entry(t).or_insert(0.0) += w / total;
        }
    }
    votes.values_mut().for_each(|p| *p = p.min(1.0));
    votes
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommenderEval {
    pub pairs: usize,
    pub accuracy: f64,
    pub iou: f64,
    /// Pairs where accuracy < iou; always zero by construction.
    pub violations: usize,
}

/// Per-pair |pred ∩ truth| / |truth| and |pred ∩ truth| / |pred ∪ truth|,
/// averaged over pairs.
pub fn score_sets<'a, I>(pairs: I) -> RecommenderEval
where
    I: IntoIterator<Item = (&'a [u32], &'a [u32])>,
{
    let mut out = RecommenderEval::default();
    for (pred, truth) in pairs {
        let pred: BTreeSet<u32> = pred.iter().copied().collect();
        let truth: BTreeSet<u32> = truth.iter().copied().collect();
        let inter = pred.intersection(&truth).count() as f64;
        let union = pred.union(&truth).count() as f64;
        let acc = if truth.is_empty() { 0.0 } else { inter / truth.len() as f64 };
        let iou = if union == 0.0 { 0.0 } else { inter / union };
        out.pairs += 1;
        out.accuracy += acc;
        out.iou += iou;
        out.violations += usize::from(acc < iou);
    }
    if out.pairs > 0 {
        out.accuracy /= out.pairs as f64;
        out.iou /= out.pairs as f64;
    }
    out
}

pub fn eval_recommender(
    pairs: &[Pair],
    model: &RecommenderModel,
    ctx: &RecommendContext<'_>,
) -> Result<RecommenderEval, RecommendError> {
    let preds: Vec<Vec<u32>> = pairs.iter().map(|p| model.predicted_set(ctx, &p.prefix)).collect::<Result<_, _>>()?;
    Ok(score_sets(preds.iter().zip(pairs).map(|(pred, p)| (pred.as_slice(), p.target.as_slice()))))
}

/// Expected IOU of a predictor that guesses a uniformly random set of
/// |truth| distinct tokens, by Monte Carlo.
pub fn random_predictor_iou(pairs: &[Pair], v: usize, trials: usize, rng_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut pool: Vec<u32> = (0..v as u32).collect();
    for p in pairs {
        let size = p.target.len().min(v);
        for _ in 0..trials {
            for i in 0..size {
                let j = rng.gen_range(i..v);
                pool.swap(i, j);
            }
            let e = score_sets([(&pool[..size], p.target.as_slice())]);
            sum += e.iou;
            n += 1;
        }
    }
    if n == 0 { 0.0 } else { sum / n as f64 }
}

/// Documentation link templates keyed by library root. `{name}` expands to
/// the canonical token, `{last}` to its final segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocUrls {
    pub templates: BTreeMap<String, String>,
}

impl Default for DocUrls {
    fn default() -> Self {
        let pairs = [
            ("pandas", "https://pandas.pydata.org/docs/reference/api/{name}.html"),
            ("numpy", "https://numpy.org/doc/stable/reference/generated/{name}.html"),
            ("scipy", "https://docs.scipy.org/doc/scipy/reference/generated/{name}.html"),
            ("sklearn", "https://scikit-learn.org/stable/modules/generated/{name}.html"),
            ("matplotlib", "https://matplotlib.org/stable/api/_as_gen/{name}.html"),
            ("seaborn", "https://seaborn.pydata.org/generated/{name}.html"),
            ("keras", "https://keras.io/search.html?query={last}"),
            ("__builtins__", "https://docs.python.org/3/library/functions.html#{last}"),
        ];
        DocUrls { templates: pairs.iter().map(|(k, v)| (String::from(*k), String::from(*v))).collect() }
    }
}

impl DocUrls {
    pub fn url(&self, canonical: &str) -> Option<String> {
        let root = canonical.split('.').next()?;
        let template = self.templates.get(root)?;
        let last = canonical.rsplit('.').next().unwrap_or(canonical);
        Some(template.replace("{name}", canonical).replace("{last}", last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Encoder, ImportedVectors, TfidfProjection};
    use crate::index::{build_index, EntryMeta, IndexItem};

    fn ids(v: &[u32]) -> Vec<u32> {
        v.to_vec()
    }

    #[test]
    fn pairs_from_a_two_block_sequence() {
        let pairs = make_training_pairs(&[("s".into(), vec![vec![5], vec![1, 0, 1]])], TargetMode::NextBlock);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].prefix, vec![vec![5]]);
        assert_eq!(pairs[0].target, [0, 1]);
    }

    #[test]
    fn five_blocks_four_pairs_minus_empty_targets() {
        let seq = ("s".into(), vec![vec![1], vec![2], vec![3], vec![4], vec![5]]);
        assert_eq!(make_training_pairs(std::slice::from_ref(&seq), TargetMode::NextBlock).len(), 4);
        let mut gap = seq;
        gap.1[2].clear();
        assert_eq!(make_training_pairs(&[gap.clone()], TargetMode::NextBlock).len(), 3);
        let rest = make_training_pairs(&[gap], TargetMode::Remaining);
        assert_eq!(rest.len(), 4);
        assert_eq!(rest[0].target, [2, 4, 5]);
    }

    #[test]
    fn metric_identities() {
        let e = score_sets([(&[1u32, 2][..], &[1u32, 2][..]), (&[3][..], &[3][..])]);
        assert_eq!((e.accuracy, e.iou), (1.0, 1.0));
        let e = score_sets([(&[0u32, 1, 2, 3][..], &[0u32, 1][..])]);
        assert_eq!((e.accuracy, e.iou), (1.0, 0.5));
        let e = score_sets([(&[][..], &[7u32][..])]);
        assert_eq!((e.accuracy, e.iou), (0.0, 0.0));
    }

    fn toy_encoder(v: usize) -> Encoder {
        let docs: Vec<Vec<u32>> = (0..v as u32).map(|t| vec![t]).collect();
        Encoder::TfidfProjection(TfidfProjection::fit(&docs, v, 32, 3).unwrap())
    }

    #[test]
    fn untrained_head_is_one_half() {
        let head = LinearHead::untrained(4, 3, HeadParams::default());
        assert_eq!(head.probabilities(&[0.3, -1.0, 2.0]), vec![0.5; 4]);
        let enc = toy_encoder(4);
        let (trained, losses) = train_linear_head(
            &[Pair { sequence_id: "s".into(), prefix: vec![vec![1]], target: vec![0] }],
            enc.native().unwrap(),
            4,
            &HeadParams { epochs: 0, ..Default::default() },
        )
        .unwrap();
        assert!(losses.is_empty());
        assert_eq!(trained.probabilities(&[0.0; 32]), vec![0.5; 4]);
    }

    #[test]
    fn one_pair_is_memorized() {
        let enc = toy_encoder(6);
        let pair = Pair { sequence_id: "s".into(), prefix: vec![vec![2, 3]], target: vec![4] };
        let pairs = vec![pair.clone(); 5];
        let (head, _) =
            train_linear_head(&pairs, enc.native().unwrap(), 6, &HeadParams { epochs: 40, ..Default::default() }).unwrap();
        let p = head.probabilities(&features(enc.native().unwrap(), &pair.prefix));
        assert!(p[4] > 0.9, "{p:?}");
        for t in [0, 1, 2, 3, 5] {
            assert!(p[t] < 0.1, "{p:?}");
        }
    }

    #[test]
    fn loss_falls_over_epochs() {
        let enc = toy_encoder(20);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pairs: Vec<Pair> = (0..100)
            .map(|i| {
                let a = rng.gen_range(0..10u32);
                Pair { sequence_id: alloc::format!("s{i}"), prefix: vec![vec![a]], target: vec![a + 10] }
            })
            .collect();
        let (_, losses) =
            train_linear_head(&pairs, enc.native().unwrap(), 20, &HeadParams { epochs: 20, learning_rate: 0.1, rng_seed: 2 })
                .unwrap();
        assert!(losses[19] < losses[0], "{losses:?}");
    }

    type Blocks = BTreeMap<String, Vec<Vec<u32>>>;
    type Entry<'a> = (&'a str, [f32; 2], Vec<Vec<u32>>);

    fn retrieval_fixture(entries: &[Entry<'_>]) -> (Encoder, SequenceIndex, Blocks) {
        let recs = entries.iter().map(|(id, v, _)| (String::from(*id), v.to_vec())).collect();
        let enc = Encoder::Imported(ImportedVectors::from_records(2, recs).unwrap());
        let items: Vec<IndexItem> = entries
            .iter()
            .map(|(id, _, b)| IndexItem {
                meta: EntryMeta { id: (*id).into(), notebook_id: "n".into(), block_count: b.len(), eda_runs: vec![], keywords: vec![] },
                blocks: b.clone(),
            })
            .collect();
        let (index, _) = build_index(&items, &enc).unwrap();
        let blocks = entries.iter().map(|(id, _, b)| (String::from(*id), b.clone())).collect();
        (enc, index, blocks)
    }

    /// Embeds every query to the same fixed direction.
    struct Fixed([f32; 2]);

    impl SequenceEncoder for Fixed {
        fn encoder_id(&self) -> String {
            "fixed".into()
        }
        fn dim(&self) -> usize {
            2
        }
        fn encode_block(&self, _: &[u32]) -> Vec<f32> {
            self.0.to_vec()
        }
    }

    #[test]
    fn retrieval_from_a_single_entry() {
        let (_, index, blocks) = retrieval_fixture(&[("s", [1.0, 0.0], vec![vec![1], vec![7]])]);
        let ctx = RecommendContext { encoder: &Fixed([1.0, 0.0]), index: &index, blocks: &blocks };
        let model = RecommenderModel::retrieval(10, 2, 8, 0.5);
        assert_eq!(model.recommend(&ctx, &[vec![1]], 5).unwrap(), vec![(7, 1.0)]);
        assert_eq!(model.recommend(&ctx, &[vec![]], 5).unwrap_err(), RecommendError::EmptyQuery);
        assert_eq!(model.recommend(&ctx, &[vec![1]], 0).unwrap_err(), RecommendError::InvalidLimit);
    }

    #[test]
    fn retrieval_aligns_prefixes_and_weights_by_similarity() {
        let (_, index, blocks) = retrieval_fixture(&[
            ("a", [1.0, 0.0], vec![vec![1], vec![2], vec![3]]),
            ("b", [0.0, 1.0], vec![vec![9], vec![1, 2], vec![4]]),
        ]);
        let q = [0.6f32, 0.8];
        let ctx = RecommendContext { encoder: &Fixed(q), index: &index, blocks: &blocks };
        let model = RecommenderModel::retrieval(10, 2, 10, 0.5);
        // Query tokens {1, 2}: "a" aligns at n=2 (next {3}); "b" at n=2 (next {4}).
        let recs = model.recommend(&ctx, &[vec![1], vec![2]], 5).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].0, 4);
        assert!((recs[0].1 - 0.8 / 1.4).abs() < 1e-6);
        assert!((recs[1].1 - 0.6 / 1.4).abs() < 1e-6);
    }

    #[test]
    fn negative_similarities_fall_back_to_equal_votes() {
        let (_, index, blocks) = retrieval_fixture(&[
            ("a", [1.0, 0.0], vec![vec![1], vec![3]]),
            ("b", [0.0, 1.0], vec![vec![1], vec![4]]),
        ]);
        let ctx = RecommendContext { encoder: &Fixed([-1.0, -1.0]), index: &index, blocks: &blocks };
        let model = RecommenderModel::retrieval(10, 2, 5, 0.5);
        assert_eq!(model.recommend(&ctx, &[vec![1]], 5).unwrap(), vec![(3, 0.5), (4, 0.5)]);
    }

    #[test]
    fn planted_pattern_ranks_fit_first() {
        // Tokens: 0 read_csv, 1 fit, 2..9 noise. 90% of sequences go
        // read_csv → fit, the rest read_csv → noise.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seqs: Vec<(String, Vec<Vec<u32>>)> = (0..100)
            .map(|i| {
                let next = if i % 10 == 0 { rng.gen_range(2..10) } else { 1 };
                let lead = rng.gen_range(2..10);
                (alloc::format!("s{i:03}"), vec![vec![lead, 0], vec![next]])
            })
            .collect();
        let enc = toy_encoder(10);
        let native = enc.native().unwrap();
        let pairs = make_training_pairs(&seqs, TargetMode::NextBlock);
        let (head, _) = train_linear_head(&pairs, native, 10, &HeadParams::default()).unwrap();
        let items: Vec<IndexItem> = seqs
            .iter()
            .map(|(id, b)| IndexItem {
                meta: EntryMeta { id: id.clone(), notebook_id: "n".into(), block_count: 2, eda_runs: vec![], keywords: vec![] },
                blocks: b.clone(),
            })
            .collect();
        let (index, _) = build_index(&items, &enc).unwrap();
        let blocks: BTreeMap<String, Vec<Vec<u32>>> = seqs.iter().cloned().collect();
        let ctx = RecommendContext { encoder: native, index: &index, blocks: &blocks };
        let query = [ids(&[3, 0])];
        for model in [RecommenderModel::linear(head, 0.5), RecommenderModel::retrieval(10, 32, 10, 0.5)] {
            let recs = model.recommend(&ctx, &query, 3).unwrap();
            assert_eq!(recs[0].0, 1, "{}: {recs:?}", model.kind_name());
            assert!(recs.windows(2).all(|w| w[0].1 >= w[1].1));
            assert!(recs.iter().all(|r| (0.0..=1.0).contains(&r.1)));
        }
    }

    #[test]
    fn random_predictor_baseline() {
        // |truth| = 1 over V = 4: IOU is 1 with probability 1/4, else 0.
        let pairs = vec![Pair { sequence_id: "s".into(), prefix: vec![vec![0]], target: vec![2] }];
        let iou = random_predictor_iou(&pairs, 4, 20_000, 1);
        assert!((iou - 0.25).abs() < 0.02, "{iou}");
    }

    #[test]
    fn binary_round_trip() {
        let mut head = LinearHead::untrained(3, 2, HeadParams::default());
        head.weights = vec![0.5, -1.0, 2.0, 0.0, 1e-3, 7.0];
        head.bias = vec![0.1, 0.2, -0.3];
        for m in [RecommenderModel::linear(head, 0.4), RecommenderModel::retrieval(10, 2, 3, 0.5)] {
            let bytes = m.to_bytes();
            assert_eq!(&bytes[..4], b"EDAR");
            assert_eq!(RecommenderModel::from_bytes(&bytes).unwrap(), m);
            assert_eq!(RecommenderModel::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err(), DecodeError::Truncated);
        }
    }

    #[test]
    fn doc_links() {
        let urls = DocUrls::default();
        assert_eq!(
            urls.url("pandas.read_csv").unwrap(),
            "https://pandas.pydata.org/docs/reference/api/pandas.read_csv.html"
        );
        assert_eq!(urls.url("__builtins__.len").unwrap(), "https://docs.python.org/3/library/functions.html#len");
        assert_eq!(urls.url("*.fit"), None);
    }
}
