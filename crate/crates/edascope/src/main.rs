use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edascope::error::{Error, Result};
use edascope::files;
use edascope::manifest::Manifest;
use edascope::pipeline::{self, EncoderKind, EncoderSettings, RecommenderKindSetting, RecommenderSettings, Settings, Snapshot, TopicSettings};
use edascope::service::{self, AppState};
use edascope::synthetic::{self, SyntheticSpec};
use edascope_core::embedding::{ParagraphParams, DEFAULT_DIM};
use edascope_core::recommend::{HeadParams, TargetMode, DEFAULT_NEIGHBORS, DEFAULT_THRESHOLD};
use edascope_core::topic::DEFAULT_SEED_BOOST;
use serde::Serialize;

/// Mine EDA sequences from notebooks, search them and recommend APIs.
#[derive(Parser)]
#[command(name = "edascope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ManifestArg {
    /// Corpus manifest (JSON lines).
    #[arg(long, env = "EDASCOPE_MANIFEST", default_value = "manifest.jsonl")]
    manifest: PathBuf,
}

#[derive(Args)]
struct EncoderArg {
    #[arg(long, env = "EDASCOPE_ENCODER", default_value = "encoder.edae")]
    encoder: PathBuf,
}

#[derive(Args)]
struct IndexArg {
    /// Vector file; metadata goes to `<index>.meta.jsonl`.
    #[arg(long, env = "EDASCOPE_INDEX", default_value = "index.edav")]
    index: PathBuf,
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "EDASCOPE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct QueryArg {
    /// Query code; `# %%` lines separate cells. Read from stdin when absent.
    #[arg(long, env = "EDASCOPE_QUERY")]
    query: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Tfidf,
    ParagraphVector,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecKind {
    Linear,
    Retrieval,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    NextBlock,
    Remaining,
}

impl From<Target> for TargetMode {
    fn from(t: Target) -> Self {
        match t {
            Target::NextBlock => TargetMode::NextBlock,
            Target::Remaining => TargetMode::Remaining,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse every notebook under a directory into a fresh manifest.
    Ingest {
        #[arg(long, env = "EDASCOPE_CORPUS")]
        corpus: PathBuf,
        #[command(flatten)]
        manifest: ManifestArg,
    },
    /// Slice every notebook into EDA sequences.
    Slice {
        #[command(flatten)]
        manifest: ManifestArg,
    },
    /// Extract API tokens and keywords; label blocks with a topic model if given.
    Analyze {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long, env = "EDASCOPE_TOPIC_MODEL")]
        topic_model: Option<PathBuf>,
    },
    /// Train the topic model and relabel blocks with it.
    TrainTopics {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long, env = "EDASCOPE_TOPIC_MODEL", default_value = "topics.edat")]
        topic_model: PathBuf,
        /// Topic count.
        #[arg(long, env = "EDASCOPE_TOPICS", default_value_t = 4)]
        topics: usize,
        #[arg(long, env = "EDASCOPE_ITERATIONS", default_value_t = 1000)]
        iterations: usize,
        #[arg(long, env = "EDASCOPE_SEED_BOOST", default_value_t = DEFAULT_SEED_BOOST)]
        boost: f64,
        /// Plain LDA without seed words.
        #[arg(long)]
        unguided: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Train a native encoder, or import precomputed vectors.
    TrainEncoder {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[arg(long, value_enum, env = "EDASCOPE_BACKEND", default_value = "paragraph-vector")]
        backend: Backend,
        #[arg(long, env = "EDASCOPE_DIM", default_value_t = DEFAULT_DIM)]
        dim: usize,
        /// Training epochs of the paragraph-vector backend.
        #[arg(long)]
        epochs: Option<usize>,
        /// Vector file keyed by sequence id; replaces training.
        #[arg(long, conflicts_with = "backend")]
        import: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Embed every analyzed sequence into the search index.
    BuildIndex {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
    },
    /// Train the API recommender.
    TrainRecommender {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[arg(long, env = "EDASCOPE_MODEL", default_value = "recommender.edar")]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "linear")]
        kind: RecKind,
        #[arg(long, env = "EDASCOPE_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, env = "EDASCOPE_TARGET", default_value = "next-block")]
        target: Target,
        #[arg(long, default_value_t = HeadParams::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = HeadParams::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        neighbors: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Top-k sequences for a query.
    Search {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long, default_value_t = service::DEFAULT_K)]
        k: usize,
    },
    /// APIs likely to be used next after a query.
    Recommend {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
        /// Recommender file; retrieval over the index when absent.
        #[arg(long, env = "EDASCOPE_MODEL")]
        model: Option<PathBuf>,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long, default_value_t = service::DEFAULT_LIMIT)]
        limit: usize,
    },
    /// Prefix-query rank evaluation; prints `k hits` rows.
    EvalSearch {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
        #[arg(long, default_value_t = 100)]
        k: usize,
    },
    /// Accuracy and IOU of a recommender against next-block targets.
    EvalRecommend {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
        #[arg(long, env = "EDASCOPE_MODEL", default_value = "recommender.edar")]
        model: PathBuf,
        /// Overrides the model's threshold.
        #[arg(long, env = "EDASCOPE_THRESHOLD")]
        threshold: Option<f64>,
        #[arg(long, value_enum, env = "EDASCOPE_TARGET", default_value = "next-block")]
        target: Target,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Write a seeded synthetic corpus.
    GenSynthetic {
        #[arg(long, env = "EDASCOPE_CORPUS", default_value = "synthetic")]
        out: PathBuf,
        #[arg(long, env = "EDASCOPE_SEED", default_value_t = SyntheticSpec::default().rng_seed)]
        seed: u64,
        #[arg(long, default_value_t = SyntheticSpec::default().notebooks)]
        notebooks: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().min_cells)]
        min_cells: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().max_cells)]
        max_cells: usize,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        manifest: ManifestArg,
        #[command(flatten)]
        encoder: EncoderArg,
        #[command(flatten)]
        index: IndexArg,
        #[arg(long, env = "EDASCOPE_MODEL")]
        model: Option<PathBuf>,
        #[arg(long, env = "EDASCOPE_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "EDASCOPE_PORT", default_value_t = 8080)]
        port: u16,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn print_json<T: Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("responses always serialize"));
}

fn read_query(q: QueryArg) -> Result<String> {
    match q.query {
        Some(code) => Ok(code),
        None => {
            let mut code = String::new();
            std::io::stdin().read_to_string(&mut code).map_err(|e| Error::io("<stdin>", e))?;
            Ok(code)
        }
    }
}

fn snapshot(manifest: &Path, index: &Path, encoder: &Path, model: Option<&Path>) -> Result<Snapshot> {
    Snapshot::load(manifest, index, encoder, model)
}

fn run(command: Command) -> Result<()> {
    let settings = Settings::default();
    match command {
        Command::Ingest { corpus, manifest } => {
            let m = pipeline::ingest(&corpus)?;
            m.write(&manifest.manifest)?;
            print_json(&serde_json::json!({
                "notebooks": m.notebooks.len(),
                "stats": m.header.stats,
                "skipped": m.header.skipped,
                "dropped_cells": m.header.dropped_cells,
            }));
        }
        Command::Slice { manifest } => {
            let mut m = Manifest::read(&manifest.manifest)?;
            let report = pipeline::slice(&mut m, &settings);
            m.write(&manifest.manifest)?;
            print_json(&report);
        }
        Command::Analyze { manifest, topic_model } => {
            let mut m = Manifest::read(&manifest.manifest)?;
            let topics = topic_model.as_deref().map(files::read_topics).transpose()?;
            let report = pipeline::analyze(&mut m, &settings, topics.as_ref())?;
            m.write(&manifest.manifest)?;
            print_json(&report);
        }
        Command::TrainTopics { manifest, topic_model, topics, iterations, boost, unguided, seed } => {
            let mut m = Manifest::read(&manifest.manifest)?;
            let ts = TopicSettings {
                k: topics,
                iterations,
                rng_seed: seed.seed,
                seed_boost: (!unguided).then_some(boost),
                ..TopicSettings::default()
            };
            let model = pipeline::train_topics(&m, &ts)?;
            files::write_topics(&topic_model, &model)?;
            let report = pipeline::analyze(&mut m, &settings, Some(&model))?;
            m.write(&manifest.manifest)?;
            let vocab = m.require_vocab()?;
            let topics: Vec<_> = (0..model.k)
                .map(|k| {
                    serde_json::json!({
                        "eda_type": model.eda_types[k],
                        "top_tokens": model.top_tokens(k, 10).into_iter().filter_map(|t| vocab.canonical(t)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            print_json(&serde_json::json!({"topics": topics, "analysis": report}));
        }
        Command::TrainEncoder { manifest, encoder, backend, dim, epochs, import, seed } => {
            let enc = match import {
                Some(path) => pipeline::import_encoder(&files::read(&path)?)?,
                None => {
                    let m = Manifest::read(&manifest.manifest)?;
                    let kind = match backend {
                        Backend::Tfidf => EncoderKind::Tfidf,
                        Backend::ParagraphVector => {
                            let base = ParagraphParams::default();
                            EncoderKind::ParagraphVector(ParagraphParams { epochs: epochs.unwrap_or(base.epochs), ..base })
                        }
                    };
                    pipeline::train_encoder(&m, &EncoderSettings { kind, dim, rng_seed: seed.seed })?
                }
            };
            files::write_encoder(&encoder.encoder, &enc)?;
            print_json(&serde_json::json!({"encoder_id": enc.encoder_id(), "dim": enc.dim()}));
        }
        Command::BuildIndex { manifest, encoder, index } => {
            let m = Manifest::read(&manifest.manifest)?;
            let enc = files::read_encoder(&encoder.encoder)?;
            let (idx, skipped) = pipeline::index(&m, &enc)?;
            files::write_index(&index.index, &idx)?;
            print_json(&serde_json::json!({"entries": idx.len(), "dim": idx.dim, "skipped_empty": skipped}));
        }
        Command::TrainRecommender { manifest, encoder, model, kind, threshold, target, epochs, learning_rate, neighbors, seed } => {
            let m = Manifest::read(&manifest.manifest)?;
            let enc = files::read_encoder(&encoder.encoder)?;
            let kind = match kind {
                RecKind::Linear => RecommenderKindSetting::LinearHead(HeadParams { epochs, learning_rate, rng_seed: seed.seed }),
                RecKind::Retrieval => RecommenderKindSetting::Retrieval { neighbors },
            };
            let rec = pipeline::train_recommender(&m, &enc, &RecommenderSettings { kind, threshold, target: target.into() })?;
            files::write_recommender(&model, &rec)?;
            print_json(&serde_json::json!({"kind": rec.kind_name(), "threshold": rec.threshold, "dim": rec.dim, "vocab": rec.v}));
        }
        Command::Search { manifest, encoder, index, query, k } => {
            let snap = snapshot(&manifest.manifest, &index.index, &encoder.encoder, None)?;
            print_json(&snap.search(&read_query(query)?, k)?);
        }
        Command::Recommend { manifest, encoder, index, model, query, limit } => {
            let snap = snapshot(&manifest.manifest, &index.index, &encoder.encoder, model.as_deref())?;
            print_json(&snap.recommend(&read_query(query)?, limit)?);
        }
        Command::EvalSearch { manifest, encoder, index, k } => {
            let m = Manifest::read(&manifest.manifest)?;
            let idx = files::read_index(&index.index)?;
            let enc = files::read_encoder(&encoder.encoder)?;
            let curve = pipeline::eval_search_curve(&m, &idx, &enc, k)?;
            let mut table = format!("# queries {} entries {}\nk\thits", curve.queries, idx.len());
            for (i, h) in curve.hits.iter().enumerate() {
                table.push_str(&format!("\n{}\t{}", i + 1, h));
            }
            emit(&table);
        }
        Command::EvalRecommend { manifest, encoder, index, model, threshold, target, seed } => {
            let m = Manifest::read(&manifest.manifest)?;
            let idx = files::read_index(&index.index)?;
            let enc = files::read_encoder(&encoder.encoder)?;
            let mut rec = files::read_recommender(&model)?;
            if let Some(t) = threshold {
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::Usage("threshold must lie strictly between 0 and 1".into()));
                }
                rec.threshold = t;
            }
            print_json(&pipeline::eval_recommend(&m, &idx, &enc, &rec, target.into(), seed.seed)?);
        }
        Command::GenSynthetic { out, seed, notebooks, min_cells, max_cells } => {
            let spec = SyntheticSpec { notebooks, min_cells, max_cells, rng_seed: seed, ..SyntheticSpec::default() };
            let nbs = synthetic::generate(&spec)?;
            synthetic::write_corpus(&out, &nbs)?;
            print_json(&serde_json::json!({"notebooks": nbs.len(), "out": out}));
        }
        Command::Serve { manifest, encoder, index, model, host, port } => {
            let snap = snapshot(&manifest.manifest, &index.index, &encoder.encoder, model.as_deref())?;
            let addr = SocketAddr::new(host, port);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            eprintln!("serving {} entries on http://{addr}", snap.index.len());
            runtime.block_on(service::serve(addr, AppState::new(Some(snap)))).map_err(|e| Error::io(addr.to_string(), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
