//! Per-sequence analysis: API call order, TF-IDF keywords and block types.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::api::{extract_and_absorb, ApiConfig, ImportEnv};
use crate::assignment::max_weight_assignment;
use crate::notebook::Notebook;
use crate::sequence::{EdaSequence, EdaType};
use crate::slicer::{backward_slice, SinkRules};
use crate::tfidf::{tfidf_keywords, DocumentFrequency};
use crate::topic::TopicModel;
use crate::vocab::Vocabulary;

/// Salient tokens per EDA type, used as GuidedLDA seeds and to name topics.
pub fn default_seed_lists() -> Vec<(EdaType, Vec<&'static str>)> {
    alloc::vec![
        (
            EdaType::Preparation,
            alloc::vec![
                "pandas.read_csv",
                "pandas.read_excel",
                "pandas.read_json",
                "*.head",
                "*.describe",
                "*.info",
                "*.fillna",
                "*.dropna",
                "*.drop",
                "*.merge",
                "*.astype",
                "*.replace",
                "*.isnull",
                "*.get_dummies",
                "pandas.get_dummies",
                "pandas.concat",
                "sklearn.model_selection.train_test_split",
                "sklearn.preprocessing.StandardScaler",
                "sklearn.preprocessing.LabelEncoder",
                "*.fit_transform",
                "*.transform",
            ],
        ),
        (
            EdaType::Modeling,
            alloc::vec![
                "*.fit",
                "sklearn.linear_model.LogisticRegression",
                "sklearn.linear_model.LinearRegression",
                "sklearn.ensemble.RandomForestClassifier",
                "sklearn.ensemble.RandomForestRegressor",
                "sklearn.ensemble.GradientBoostingClassifier",
                "sklearn.tree.DecisionTreeClassifier",
                "sklearn.svm.SVC",
                "sklearn.neighbors.KNeighborsClassifier",
                "sklearn.cluster.KMeans",
                "keras.models.Sequential",
                "keras.layers.Dense",
                "*.add",
                "*.compile",
            ],
        ),
        (
            EdaType::Evaluation,
            alloc::vec![
                "*.predict",
                "*.predict_proba",
                "*.score",
                "*.evaluate",
                "sklearn.metrics.accuracy_score",
                "sklearn.metrics.confusion_matrix",
                "sklearn.metrics.classification_report",
                "sklearn.metrics.mean_squared_error",
                "sklearn.metrics.mean_absolute_error",
                "sklearn.metrics.r2_score",
                "sklearn.metrics.roc_auc_score",
                "sklearn.metrics.f1_score",
                "sklearn.model_selection.cross_val_score",
            ],
        ),
        (
            EdaType::Visualization,
            alloc::vec![
                "matplotlib.pyplot.figure",
                "matplotlib.pyplot.show",
                "matplotlib.pyplot.title",
                "matplotlib.pyplot.xlabel",
                "matplotlib.pyplot.ylabel",
                "matplotlib.pyplot.plot",
                "matplotlib.pyplot.subplots",
                "matplotlib.pyplot.legend",
                "seaborn.countplot",
                "seaborn.heatmap",
                "seaborn.barplot",
                "seaborn.boxplot",
                "seaborn.histplot",
                "seaborn.distplot",
                "seaborn.scatterplot",
                "*.plot",
                "*.hist",
            ],
        ),
    ]
}

/// Seed token ids per topic, topic `k` seeded with the list of
/// `EdaType::ALL[k]`. Tokens missing from the vocabulary are dropped, as
/// are tokens listed under more than one type.
pub fn seed_ids(vocab: &Vocabulary, lists: &[(EdaType, Vec<&str>)]) -> Vec<Vec<u32>> {
    let per_type: Vec<Vec<u32>> = EdaType::ALL
        .iter()
        .map(|t| {
            let names = lists.iter().filter(|(ty, _)| ty == t).flat_map(|(_, l)| l.iter());
            let mut ids: Vec<u32> = names.filter_map(|n| vocab.id(n)).collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        })
        .collect();
    per_type
        .iter()
        .enumerate()
        .map(|(i, ids)| {
            ids.iter()
                .copied()
                .filter(|id| per_type.iter().enumerate().all(|(j, other)| j == i || !other.contains(id)))
                .collect()
        })
        .collect()
}

/// Names each topic by matching its top tokens against the seed lists,
/// maximizing total overlap. Topics left unmatched stay `Unknown`.
pub fn assign_topic_types(
    model: &TopicModel,
    vocab: &Vocabulary,
    lists: &[(EdaType, Vec<&str>)],
    top_n: usize,
) -> Vec<EdaType> {
    let tops: Vec<Vec<&str>> = (0..model.k)
        .map(|k| model.top_tokens(k, top_n).into_iter().filter_map(|id| vocab.canonical(id)).collect())
        .collect();
    let overlap: Vec<Vec<f64>> = tops
        .iter()
        .map(|top| lists.iter().map(|(_, seeds)| top.iter().filter(|t| seeds.contains(t)).count() as f64).collect())
        .collect();
    max_weight_assignment(&overlap)
        .into_iter()
        .map(|m| m.map_or(EdaType::Unknown, |j| lists[j].0))
        .collect()
}

/// EDA type of the topic with the highest block log-likelihood; `Unknown`
/// for blocks with no in-vocabulary tokens.
pub fn classify_block(tokens: &[u32], model: &TopicModel) -> EdaType {
    model
        .most_likely_topic(tokens)
        .and_then(|k| model.eda_types.get(k).copied())
        .unwrap_or(EdaType::Unknown)
}

/// Fills `api_tokens` of every block, carrying imports and bindings from
/// one block to the next. Returns the number of blocks that failed to parse.
pub fn extract_sequence_tokens(seq: &mut EdaSequence, config: &ApiConfig) -> usize {
    let mut env = ImportEnv::new();
    let mut failed = 0;
    for block in &mut seq.blocks {
        let calls = extract_and_absorb(&block.text(), &mut env, config);
        failed += usize::from(calls.parse_failed);
        block.api_tokens = calls.tokens;
    }
    failed
}

pub fn sequence_tokens(seq: &EdaSequence) -> Vec<String> {
    seq.blocks.iter().flat_map(|b| b.api_tokens.iter().cloned()).collect()
}

pub fn build_vocabulary(seqs: &[EdaSequence]) -> Vocabulary {
    Vocabulary::from_tokens(seqs.iter().flat_map(|s| s.blocks.iter()).flat_map(|b| b.api_tokens.iter().map(String::as_str)))
}

/// Document frequencies with sequences as documents.
pub fn sequence_document_frequency(seqs: &[EdaSequence]) -> DocumentFrequency {
    DocumentFrequency::build(seqs.iter().map(sequence_tokens))
}

/// The stored analysis of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub sequence_id: String,
    /// Vocabulary ids of each block's API tokens, in call order.
    pub api_ids: Vec<Vec<u32>>,
    pub keywords: Vec<(String, f64)>,
    pub eda_types: Vec<EdaType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub api: ApiConfig,
    pub keyword_count: usize,
    pub topic_top_n: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { api: ApiConfig::default(), keyword_count: 10, topic_top_n: 20 }
    }
}

/// Fills keywords and block types of sequences whose tokens are already
/// extracted, and returns their analysis records. `model` may be absent,
/// in which case every block is `Unknown`.
pub fn annotate(
    seqs: &mut [EdaSequence],
    vocab: &Vocabulary,
    df: &DocumentFrequency,
    model: Option<&TopicModel>,
    keyword_count: usize,
) -> Vec<AnalysisRecord> {
    seqs.iter_mut()
        .map(|seq| {
            let mut api_ids = Vec::with_capacity(seq.blocks.len());
            let mut eda_types = Vec::with_capacity(seq.blocks.len());
            for block in &mut seq.blocks {
                let ids = vocab.encode(&block.api_tokens);
                block.eda_type = model.map_or(EdaType::Unknown, |m| classify_block(&ids, m));
                block.keywords = tfidf_keywords(&block.api_tokens, df, keyword_count);
                api_ids.push(ids);
                eda_types.push(block.eda_type);
            }
            AnalysisRecord {
                sequence_id: seq.id.clone(),
                api_ids,
                keywords: tfidf_keywords(&sequence_tokens(seq), df, keyword_count),
                eda_types,
            }
        })
        .collect()
}

/// Turns free-form query code into a sequence: cells are separated by
/// `# %%` lines, the last cell is the sink, and tokens are extracted.
pub fn query_sequence(code: &str, rules: &SinkRules, config: &ApiConfig) -> EdaSequence {
    let cells = split_query_cells(code);
    let notebook = Notebook::from_code_cells("query", &cells);
    let sink = cells.len().saturating_sub(1);
    let mut seq = if cells.is_empty() {
        EdaSequence {
            id: EdaSequence::sequence_id("query", 0),
            notebook_id: "query".into(),
            member_cells: Vec::new(),
            blocks: Vec::new(),
            sink_cell: 0,
            external_names: Vec::new(),
        }
    } else {
        backward_slice(&notebook, sink, rules)
    };
    extract_sequence_tokens(&mut seq, config);
    seq
}

pub fn split_query_cells(code: &str) -> Vec<String> {
    let mut cells: Vec<String> = alloc::vec![String::new()];
    for line in code.split_inclusive('\n') {
        if line.trim_start().starts_with("# %%") {
            cells.push(String::new());
        } else {
            cells.last_mut().expect("non-empty").push_str(line);
        }
    }
    cells.retain(|c| !c.trim().is_empty());
    cells
}
