//! Exact cosine search over sequence embeddings and the prefix-query
//! evaluation.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::analyzer::{query_sequence, sequence_tokens};
use crate::api::ApiConfig;
use crate::embedding::{vecfile, EmbedError, Encoder, SequenceEncoder};
use crate::math::{dot, l2_normalize, normalized};
use crate::sequence::EdaType;
use crate::slicer::SinkRules;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub enum IndexError {
    DimensionMismatch { expected: usize, found: usize },
    DuplicateId(String),
    Embed(EmbedError),
    /// The query yielded no API tokens.
    EmptyQuery,
    InvalidK,
    Format(&'static str),
}

impl core::error::Error for IndexError {}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            IndexError::DuplicateId(id) => write!(f, "sequence id {id} appears twice"),
            IndexError::Embed(e) => write!(f, "{e}"),
            IndexError::EmptyQuery => f.write_str("no API calls found in the query"),
            IndexError::InvalidK => f.write_str("k must be at least 1"),
            IndexError::Format(what) => write!(f, "bad index data: {what}"),
        }
    }
}

impl From<EmbedError> for IndexError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::DimensionMismatch { expected, found } => IndexError::DimensionMismatch { expected, found },
            other => IndexError::Embed(other),
        }
    }
}

/// Everything about an entry except its vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub id: String,
    pub notebook_id: String,
    pub block_count: usize,
    /// Run-length summary of the block types.
    pub eda_runs: Vec<(EdaType, usize)>,
    pub keywords: Vec<(String, f64)>,
}

impl EntryMeta {
    pub fn eda_runs_of(types: &[EdaType]) -> Vec<(EdaType, usize)> {
        let mut runs: Vec<(EdaType, usize)> = Vec::new();
        for &t in types {
            match runs.last_mut() {
                Some((last, n)) if *last == t => *n += 1,
                _ => runs.push((t, 1)),
            }
        }
        runs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub meta: EntryMeta,
    /// Unit norm.
    pub vector: Vec<f32>,
}

/// Input to [`build_index`]: metadata plus the token ids of every block.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexItem {
    pub meta: EntryMeta,
    pub blocks: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceIndex {
    pub encoder_id: String,
    pub dim: usize,
    /// Sorted by id.
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

/// Encodes and normalizes every item. Items without any token embed to the
/// zero vector and are left out; their ids are returned.
pub fn build_index(items: &[IndexItem], encoder: &Encoder) -> Result<(SequenceIndex, Vec<String>), IndexError> {
    let dim = encoder.dim();
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(items.len());
    let mut skipped = Vec::new();
    for item in items {
        if !seen.insert(item.meta.id.clone()) {
            return Err(IndexError::DuplicateId(item.meta.id.clone()));
        }
        let emb = encoder.encode_sequence(&item.meta.id, &item.blocks)?;
        if emb.values.len() != dim {
            return Err(IndexError::DimensionMismatch { expected: dim, found: emb.values.len() });
        }
        if emb.empty || emb.values.iter().all(|&x| x == 0.0) {
            skipped.push(item.meta.id.clone());
            continue;
        }
        let mut vector = emb.values;
        l2_normalize(&mut vector);
        entries.push(IndexEntry { meta: item.meta.clone(), vector });
    }
    entries.sort_by(|a, b| a.meta.id.cmp(&b.meta.id));
    Ok((SequenceIndex { encoder_id: encoder.encoder_id(), dim, entries }, skipped))
}

impl SequenceIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries.binary_search_by(|e| e.meta.id.as_str().cmp(id)).ok().map(|i| &self.entries[i])
    }

    /// Cosine score of every entry against `query`, in entry order.
    pub fn scores(&self, query: &[f32]) -> Vec<f64> {
        let q = normalized(query);
        self.entries.iter().map(|e| dot(&q, &e.vector).clamp(-1.0, 1.0)).collect()
    }

    /// Top `k` entries by cosine, ties by ascending id.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<Hit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: query.len() });
        }
        let scores = self.scores(query);
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        // Entries are id-sorted and the sort is stable.
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| Hit { id: self.entries[i].meta.id.clone(), score: scores[i] })
            .collect())
    }

    /// Rank of `id` under the search order: 1 + entries scoring higher +
    /// entries scoring equal with a smaller id.
    pub fn rank_of(&self, query: &[f32], id: &str) -> Option<usize> {
        let pos = self.entries.iter().position(|e| e.meta.id == id)?;
        let scores = self.scores(query);
        let own = scores[pos];
        let ahead = scores
            .iter()
            .enumerate()
            .filter(|&(i, &s)| s > own || (s == own && i < pos))
            .count();
        Some(1 + ahead)
    }

    /// The vectors as an `EDAV` file.
    pub fn vector_bytes(&self) -> Vec<u8> {
        vecfile::encode(self.dim, self.entries.iter().map(|e| (e.meta.id.as_str(), e.vector.as_slice())))
    }

    /// Reassembles an index from its vector file and metadata records.
    pub fn from_parts(encoder_id: String, vectors: &[u8], metas: Vec<EntryMeta>) -> Result<Self, IndexError> {
        let (dim, records) = vecfile::decode(vectors).map_err(|e| IndexError::Embed(EmbedError::Format(e)))?;
        if records.len() != metas.len() {
            return Err(IndexError::Format("vector and metadata counts differ"));
        }
        let mut entries = Vec::with_capacity(metas.len());
        for ((id, vector), meta) in records.into_iter().zip(metas) {
            if id != meta.id {
                return Err(IndexError::Format("vector and metadata ids differ"));
            }
            entries.push(IndexEntry { meta, vector });
        }
        if entries.windows(2).any(|w| w[0].meta.id >= w[1].meta.id) {
            return Err(IndexError::Format("entries not sorted by id"));
        }
        Ok(SequenceIndex { encoder_id, dim, entries })
    }
}

/// Query code → block token ids, through the slicer and analyzer.
pub fn query_blocks(code: &str, vocab: &Vocabulary, rules: &SinkRules, api: &ApiConfig) -> Result<Vec<Vec<u32>>, IndexError> {
    let seq = query_sequence(code, rules, api);
    if sequence_tokens(&seq).is_empty() {
        return Err(IndexError::EmptyQuery);
    }
    Ok(seq.blocks.iter().map(|b| vocab.encode(&b.api_tokens)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query: String,
    pub hits: Vec<Hit>,
}

pub struct SearchContext<'a> {
    pub index: &'a SequenceIndex,
    pub encoder: &'a Encoder,
    pub vocab: &'a Vocabulary,
    pub rules: &'a SinkRules,
    pub api: &'a ApiConfig,
}

impl SearchContext<'_> {
    pub fn embed_code(&self, code: &str) -> Result<Vec<f32>, IndexError> {
        let blocks = query_blocks(code, self.vocab, self.rules, self.api)?;
        Ok(self.encoder.encode_query(&blocks)?.values)
    }

    pub fn search(&self, code: &str, k: usize) -> Result<SearchResult, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        let q = self.embed_code(code)?;
        Ok(SearchResult { query: code.into(), hits: self.index.search(&q, k)? })
    }
}

/// hits[k-1] = prefix queries whose sequence ranked within the top k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitCurve {
    pub queries: usize,
    pub hits: Vec<usize>,
}

impl HitCurve {
    pub fn at(&self, k: usize) -> usize {
        self.hits[k - 1]
    }
}

/// For each sequence of N ≥ 2 blocks, queries with its first 1..N−1 blocks
/// and records the rank of the full sequence. Shorter sequences are skipped.
pub fn eval_search(
    sequences: &[(String, Vec<Vec<u32>>)],
    index: &SequenceIndex,
    encoder: &dyn SequenceEncoder,
    k_max: usize,
) -> HitCurve {
    let mut at_rank = vec![0usize; k_max];
    let mut queries = 0;
    for (id, blocks) in sequences {
        for n in 1..blocks.len() {
            queries += 1;
            let q = encoder.encode(&blocks[..n]).values;
            if let Some(rank) = index.rank_of(&q, id) {
                if rank <= k_max {
                    at_rank[rank - 1] += 1;
                }
            }
        }
    }
    let mut acc = 0;
    let hits = at_rank
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect();
    HitCurve { queries, hits }
}
