//! The pipeline steps, each a function from stored artifacts to new ones.

use std::collections::BTreeMap;
use std::path::Path;

use edascope_core::analyzer::{
    annotate, assign_topic_types, build_vocabulary, default_seed_lists, extract_sequence_tokens, seed_ids,
    sequence_document_frequency, AnalyzerConfig,
};
use edascope_core::api::ApiConfig;
use edascope_core::dna::{dna_runs, member_flags, DnaRun};
use edascope_core::embedding::{Encoder, ImportedVectors, ParagraphParams, ParagraphVector, TfidfProjection};
use edascope_core::index::{build_index, eval_search, query_blocks, EntryMeta, HitCurve, IndexItem, SequenceIndex};
use edascope_core::notebook::CellKind;
use edascope_core::recommend::{
    eval_recommender, make_training_pairs, random_predictor_iou, train_linear_head, DocUrls, HeadParams, Pair,
    RecommendContext, RecommenderEval, RecommenderModel, TargetMode, DEFAULT_NEIGHBORS,
};
use edascope_core::sequence::{EdaSequence, EdaType};
use edascope_core::slicer::{executability_violations, slice_notebook, SinkRules};
use edascope_core::topic::{train_guided_lda, train_lda, LdaParams, TopicModel, DEFAULT_SEED_BOOST};
use serde::{Deserialize, Serialize};

use crate::corpus::scan_corpus;
use crate::error::{Error, Result};
use crate::manifest::Manifest;

/// Settings shared by every step that parses code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub rules: SinkRules,
    pub analyzer: AnalyzerConfig,
}

pub fn ingest(root: &Path) -> Result<Manifest> {
    let scan = scan_corpus(root)?;
    Ok(Manifest::from_scan(&root.to_string_lossy(), scan))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub notebooks: usize,
    pub sequences: usize,
    /// Sequence ids with a free name that is neither a builtin nor recorded
    /// as external.
    pub violations: Vec<String>,
}

/// Replaces the manifest's sequences, dropping any analysis.
pub fn slice(manifest: &mut Manifest, settings: &Settings) -> SliceReport {
    manifest.sequences = manifest.notebooks.iter().flat_map(|n| slice_notebook(&n.notebook, &settings.rules)).collect();
    manifest.vocab = None;
    manifest.analysis.clear();
    let violations = manifest
        .sequences
        .iter()
        .filter(|s| !executability_violations(s).is_empty())
        .map(|s| s.id.clone())
        .collect();
    SliceReport { notebooks: manifest.notebooks.len(), sequences: manifest.sequences.len(), violations }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub sequences: usize,
    pub vocab_size: usize,
    pub unparsed_blocks: usize,
    pub typed: bool,
}

/// Extracts API tokens, builds the vocabulary and keyword statistics, and
/// labels blocks with `topics` when given.
pub fn analyze(manifest: &mut Manifest, settings: &Settings, topics: Option<&TopicModel>) -> Result<AnalyzeReport> {
    let mut unparsed = 0;
    for seq in &mut manifest.sequences {
        unparsed += extract_sequence_tokens(seq, &settings.analyzer.api);
    }
    let vocab = build_vocabulary(&manifest.sequences);
    if let Some(model) = topics {
        if model.v != vocab.len() {
            return Err(Error::Usage(format!(
                "topic model covers {} tokens but the vocabulary has {}; retrain topics",
                model.v,
                vocab.len()
            )));
        }
    }
    let df = sequence_document_frequency(&manifest.sequences);
    manifest.analysis = annotate(&mut manifest.sequences, &vocab, &df, topics, settings.analyzer.keyword_count);
    let report = AnalyzeReport {
        sequences: manifest.sequences.len(),
        vocab_size: vocab.len(),
        unparsed_blocks: unparsed,
        typed: topics.is_some(),
    };
    manifest.vocab = Some(vocab);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSettings {
    pub k: usize,
    pub iterations: usize,
    pub rng_seed: u64,
    /// `None` trains plain LDA.
    pub seed_boost: Option<f64>,
    pub top_n: usize,
}

impl Default for TopicSettings {
    fn default() -> Self {
        TopicSettings { k: 4, iterations: 1000, rng_seed: 0, seed_boost: Some(DEFAULT_SEED_BOOST), top_n: 20 }
    }
}

/// Trains topics over sequences as documents and names them by seed overlap.
pub fn train_topics(manifest: &Manifest, settings: &TopicSettings) -> Result<TopicModel> {
    let vocab = manifest.require_vocab()?;
    let docs: Vec<Vec<u32>> = manifest.analysis.iter().map(|a| a.api_ids.concat()).collect();
    let mut params = LdaParams::new(settings.k, settings.rng_seed);
    params.iterations = settings.iterations;
    let lists = default_seed_lists();
    let (mut model, _) = match settings.seed_boost {
        Some(boost) => {
            let mut seeds = seed_ids(vocab, &lists);
            seeds.resize(settings.k, Vec::new());
            seeds.truncate(settings.k);
            train_guided_lda(&docs, vocab.len(), &params, &seeds, boost)?
        }
        None => train_lda(&docs, vocab.len(), &params)?,
    };
    model.eda_types = assign_topic_types(&model, vocab, &lists, settings.top_n);
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncoderKind {
    Tfidf,
    ParagraphVector(ParagraphParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSettings {
    pub kind: EncoderKind,
    pub dim: usize,
    pub rng_seed: u64,
}

/// Fits a native encoder on the analyzed corpus. TF-IDF statistics use
/// sequences as documents; paragraph vectors are trained on blocks, the
/// unit they later encode.
pub fn train_encoder(manifest: &Manifest, settings: &EncoderSettings) -> Result<Encoder> {
    let v = manifest.require_vocab()?.len();
    match &settings.kind {
        EncoderKind::Tfidf => {
            let docs: Vec<Vec<u32>> = manifest.analysis.iter().map(|a| a.api_ids.concat()).collect();
            Ok(Encoder::TfidfProjection(TfidfProjection::fit(&docs, v, settings.dim, settings.rng_seed)?))
        }
        EncoderKind::ParagraphVector(base) => {
            let blocks: Vec<Vec<u32>> =
                manifest.analysis.iter().flat_map(|a| a.api_ids.iter()).filter(|b| !b.is_empty()).cloned().collect();
            let params = ParagraphParams { dim: settings.dim, rng_seed: settings.rng_seed, ..base.clone() };
            Ok(Encoder::ParagraphVector(ParagraphVector::train(&blocks, v, &params)?.0))
        }
    }
}

pub fn import_encoder(data: &[u8]) -> Result<Encoder> {
    Ok(Encoder::Imported(ImportedVectors::from_vecfile(data)?))
}

pub fn index_items(manifest: &Manifest) -> Result<Vec<IndexItem>> {
    manifest.require_vocab()?;
    let notebooks: BTreeMap<&str, &str> =
        manifest.sequences.iter().map(|s| (s.id.as_str(), s.notebook_id.as_str())).collect();
    Ok(manifest
        .analysis
        .iter()
        .map(|a| IndexItem {
            meta: EntryMeta {
                id: a.sequence_id.clone(),
                notebook_id: notebooks.get(a.sequence_id.as_str()).copied().unwrap_or_default().to_string(),
                block_count: a.api_ids.len(),
                eda_runs: EntryMeta::eda_runs_of(&a.eda_types),
                keywords: a.keywords.clone(),
            },
            blocks: a.api_ids.clone(),
        })
        .collect())
}

/// Returns the index and the ids left out for having no tokens.
pub fn index(manifest: &Manifest, encoder: &Encoder) -> Result<(SequenceIndex, Vec<String>)> {
    Ok(build_index(&index_items(manifest)?, encoder)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecommenderKindSetting {
    LinearHead(HeadParams),
    Retrieval { neighbors: usize },
}

impl Default for RecommenderKindSetting {
    fn default() -> Self {
        RecommenderKindSetting::LinearHead(HeadParams::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommenderSettings {
    pub kind: RecommenderKindSetting,
    pub threshold: f64,
    pub target: TargetMode,
}

pub fn training_pairs(manifest: &Manifest, mode: TargetMode) -> Result<Vec<Pair>> {
    Ok(make_training_pairs(&manifest.block_lists()?, mode))
}

pub fn train_recommender(manifest: &Manifest, encoder: &Encoder, settings: &RecommenderSettings) -> Result<RecommenderModel> {
    let v = manifest.require_vocab()?.len();
    if !(settings.threshold > 0.0 && settings.threshold < 1.0) {
        return Err(Error::Usage("threshold must lie strictly between 0 and 1".into()));
    }
    match &settings.kind {
        RecommenderKindSetting::Retrieval { neighbors } => {
            Ok(RecommenderModel::retrieval(*neighbors, encoder.dim(), v, settings.threshold))
        }
        RecommenderKindSetting::LinearHead(params) => {
            let native = native(encoder)?;
            let pairs = training_pairs(manifest, settings.target)?;
            let (head, _) = train_linear_head(&pairs, native, v, params)?;
            Ok(RecommenderModel::linear(head, settings.threshold))
        }
    }
}

fn native(encoder: &Encoder) -> Result<&dyn edascope_core::embedding::SequenceEncoder> {
    encoder.native().ok_or(Error::Embed(edascope_core::embedding::EmbedError::QueryUnsupported))
}

/// Everything a query needs, loaded once.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub manifest: Manifest,
    pub index: SequenceIndex,
    pub encoder: Encoder,
    pub recommender: Option<RecommenderModel>,
    pub blocks: BTreeMap<String, Vec<Vec<u32>>>,
    pub settings: Settings,
    pub doc_urls: DocUrls,
}

pub const RESPONSE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub score: f64,
    pub notebook_id: String,
    pub keywords: Vec<(String, f64)>,
    pub dna: Vec<DnaRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub schema: u32,
    pub query: String,
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedApi {
    pub api: String,
    pub probability: f64,
    pub doc_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub schema: u32,
    pub model_id: String,
    pub apis: Vec<RecommendedApi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub index: usize,
    pub kind: CellKind,
    pub source: String,
    pub in_sequence: bool,
    pub eda_type: Option<EdaType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotebookView {
    pub schema: u32,
    pub id: String,
    pub path: String,
    pub sequence: Option<String>,
    pub cells: Vec<CellView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceView {
    pub schema: u32,
    #[serde(flatten)]
    pub sequence: EdaSequence,
    pub dna: Vec<DnaRun>,
}

impl Snapshot {
    pub fn load(manifest_path: &Path, index_path: &Path, encoder_path: &Path, model_path: Option<&Path>) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let index = crate::files::read_index(index_path)?;
        let encoder = crate::files::read_encoder(encoder_path)?;
        let recommender = model_path.map(crate::files::read_recommender).transpose()?;
        Self::new(manifest, index, encoder, recommender)
    }

    pub fn new(manifest: Manifest, index: SequenceIndex, encoder: Encoder, recommender: Option<RecommenderModel>) -> Result<Self> {
        encoder.check_dim(index.dim)?;
        if let Some(m) = &recommender {
            encoder.check_dim(m.dim)?;
        }
        let blocks = manifest.analyzed_blocks()?;
        Ok(Snapshot { manifest, index, encoder, recommender, blocks, settings: Settings::default(), doc_urls: DocUrls::default() })
    }

    fn query_ids(&self, code: &str) -> Result<Vec<Vec<u32>>> {
        let vocab = self.manifest.require_vocab()?;
        Ok(query_blocks(code, vocab, &self.settings.rules, &self.settings.analyzer.api)?)
    }

    pub fn search(&self, code: &str, k: usize) -> Result<SearchResponse> {
        if k == 0 {
            return Err(Error::Index(edascope_core::index::IndexError::InvalidK));
        }
        let blocks = self.query_ids(code)?;
        let query = self.encoder.encode_query(&blocks)?;
        let hits = self.index.search(&query.values, k)?;
        let results = hits
            .into_iter()
            .map(|h| {
                let entry = self.index.get(&h.id);
                let dna = self.manifest.sequence(&h.id).and_then(|s| self.manifest.notebook(&s.notebook_id).map(|n| dna_runs(n, s)));
                SearchHit {
                    notebook_id: entry.map(|e| e.meta.notebook_id.clone()).unwrap_or_default(),
                    keywords: entry.map(|e| e.meta.keywords.clone()).unwrap_or_default(),
                    dna: dna.unwrap_or_default(),
                    id: h.id,
                    score: h.score,
                }
            })
            .collect();
        Ok(SearchResponse { schema: RESPONSE_SCHEMA, query: code.into(), results })
    }

    /// Uses the loaded recommender, or retrieval over the index when none is.
    pub fn recommend(&self, code: &str, limit: usize) -> Result<Recommendation> {
        let vocab = self.manifest.require_vocab()?;
        let fallback;
        let model = match &self.recommender {
            Some(m) => m,
            None => {
                fallback = RecommenderModel::retrieval(DEFAULT_NEIGHBORS, self.index.dim, vocab.len(), 0.5);
                &fallback
            }
        };
        let prefix = self.query_ids(code)?;
        let native = native(&self.encoder)?;
        let ctx = RecommendContext { encoder: native, index: &self.index, blocks: &self.blocks };
        let ranked = model.recommend(&ctx, &prefix, limit)?;
        let apis = ranked
            .into_iter()
            .map(|(id, p)| {
                let api = vocab.canonical(id).unwrap_or_default().to_string();
                RecommendedApi { doc_url: self.doc_urls.url(&api), api, probability: p }
            })
            .collect();
        Ok(Recommendation { schema: RESPONSE_SCHEMA, model_id: format!("{}+{}", model.kind_name(), self.encoder.encoder_id()), apis })
    }

    pub fn sequence_view(&self, id: &str) -> Option<SequenceView> {
        let seq = self.manifest.sequence(id)?;
        let dna = self.manifest.notebook(&seq.notebook_id).map(|n| dna_runs(n, seq)).unwrap_or_default();
        Some(SequenceView { schema: RESPONSE_SCHEMA, sequence: seq.clone(), dna })
    }

    /// `Ok(None)` for an unknown notebook; an unknown or foreign sequence id
    /// is an error.
    pub fn notebook_view(&self, id: &str, sequence: Option<&str>) -> Result<Option<NotebookView>, String> {
        let Some(record) = self.manifest.notebooks.iter().find(|n| n.id == id) else { return Ok(None) };
        let nb = &record.notebook;
        let seq = match sequence {
            Some(sid) => match self.manifest.sequence(sid) {
                Some(s) if s.notebook_id == id => Some(s),
                Some(_) => return Err(format!("sequence {sid} belongs to another notebook")),
                None => return Err(format!("unknown sequence {sid}")),
            },
            None => None,
        };
        let flags = seq.map(|s| member_flags(nb, s)).unwrap_or_else(|| vec![false; nb.cells.len()]);
        let cells = nb
            .cells
            .iter()
            .zip(flags)
            .map(|(c, in_sequence)| CellView {
                index: c.index,
                kind: c.kind,
                source: c.text(),
                in_sequence,
                eda_type: seq.and_then(|s| s.blocks.iter().find(|b| b.origin_cell == c.index)).map(|b| b.eda_type),
            })
            .collect();
        Ok(Some(NotebookView {
            schema: RESPONSE_SCHEMA,
            id: id.into(),
            path: record.path.clone(),
            sequence: sequence.map(String::from),
            cells,
        }))
    }
}

pub fn eval_search_curve(manifest: &Manifest, index: &SequenceIndex, encoder: &Encoder, k_max: usize) -> Result<HitCurve> {
    if k_max == 0 {
        return Err(Error::Index(edascope_core::index::IndexError::InvalidK));
    }
    let seqs = manifest.block_lists()?;
    Ok(eval_search(&seqs, index, native(encoder)?, k_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendReport {
    pub model: String,
    pub threshold: f64,
    #[serde(flatten)]
    pub eval: RecommenderEval,
    pub random_iou: f64,
}

pub fn eval_recommend(
    manifest: &Manifest,
    index: &SequenceIndex,
    encoder: &Encoder,
    model: &RecommenderModel,
    mode: TargetMode,
    rng_seed: u64,
) -> Result<RecommendReport> {
    let pairs = training_pairs(manifest, mode)?;
    let blocks = manifest.analyzed_blocks()?;
    let ctx = RecommendContext { encoder: native(encoder)?, index, blocks: &blocks };
    let eval = eval_recommender(&pairs, model, &ctx)?;
    Ok(RecommendReport {
        model: model.kind_name().into(),
        threshold: model.threshold,
        eval,
        random_iou: random_predictor_iou(&pairs, model.v, 20, rng_seed),
    })
}

/// Default analyzer configuration, exposed for callers that build one.
pub fn default_api() -> ApiConfig {
    ApiConfig::default()
}
