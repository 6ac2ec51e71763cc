//! The corpus manifest: one JSON record per line, tagged by `type`.
//!
//! A fresh manifest holds a header and one record per notebook. `slice`
//! appends sequence records, `analyze` a vocabulary record and one analysis
//! record per sequence. Rerunning a step replaces everything downstream.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use edascope_core::analyzer::AnalysisRecord;
use edascope_core::notebook::{CorpusStats, Notebook};
use edascope_core::sequence::EdaSequence;
use edascope_core::vocab::Vocabulary;
use serde::{Deserialize, Serialize};

use crate::corpus::{Scan, Skipped};
use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: u32,
    pub corpus_root: String,
    pub stats: CorpusStats,
    pub skipped: Vec<Skipped>,
    pub dropped_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotebookRecord {
    pub id: String,
    pub path: String,
    pub code_cells: usize,
    pub markdown_cells: usize,
    pub notebook: Notebook,
}

impl NotebookRecord {
    pub fn new(notebook: Notebook) -> Self {
        NotebookRecord {
            id: notebook.id.clone(),
            path: notebook.source_path.clone(),
            code_cells: notebook.code_cell_count(),
            markdown_cells: notebook.markdown_cell_count(),
            notebook,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header(Header),
    Notebook(NotebookRecord),
    Sequence(EdaSequence),
    Vocab { tokens: Vocabulary },
    Analysis(AnalysisRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: Header,
    pub notebooks: Vec<NotebookRecord>,
    pub sequences: Vec<EdaSequence>,
    pub vocab: Option<Vocabulary>,
    pub analysis: Vec<AnalysisRecord>,
}

impl Manifest {
    pub fn from_scan(corpus_root: &str, scan: Scan) -> Self {
        Manifest {
            header: Header {
                schema: SCHEMA,
                corpus_root: corpus_root.into(),
                stats: scan.stats,
                skipped: scan.skipped,
                dropped_cells: scan.dropped_cells,
            },
            notebooks: scan.notebooks.into_iter().map(NotebookRecord::new).collect(),
            sequences: Vec::new(),
            vocab: None,
            analysis: Vec::new(),
        }
    }

    pub fn notebook(&self, id: &str) -> Option<&Notebook> {
        self.notebooks.iter().find(|n| n.id == id).map(|n| &n.notebook)
    }

    pub fn sequence(&self, id: &str) -> Option<&EdaSequence> {
        self.sequences.iter().find(|s| s.id == id)
    }

    /// The vocabulary, or an error naming the missing step.
    pub fn require_vocab(&self) -> Result<&Vocabulary> {
        self.vocab.as_ref().ok_or_else(|| Error::Usage("manifest has no analysis; run `analyze` first".into()))
    }

    /// Block token ids of every analyzed sequence.
    pub fn analyzed_blocks(&self) -> Result<BTreeMap<String, Vec<Vec<u32>>>> {
        self.require_vocab()?;
        Ok(self.analysis.iter().map(|a| (a.sequence_id.clone(), a.api_ids.clone())).collect())
    }

    /// Analyzed sequences as (id, blocks), in manifest order.
    pub fn block_lists(&self) -> Result<Vec<(String, Vec<Vec<u32>>)>> {
        self.require_vocab()?;
        Ok(self.analysis.iter().map(|a| (a.sequence_id.clone(), a.api_ids.clone())).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut push = |r: &Record| {
            serde_json::to_writer(&mut out, r).expect("manifest records always serialize");
            out.push(b'\n');
        };
        push(&Record::Header(self.header.clone()));
        for n in &self.notebooks {
            push(&Record::Notebook(n.clone()));
        }
        for s in &self.sequences {
            push(&Record::Sequence(s.clone()));
        }
        if let Some(v) = &self.vocab {
            push(&Record::Vocab { tokens: v.clone() });
        }
        for a in &self.analysis {
            push(&Record::Analysis(a.clone()));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::files::write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Manifest { path: path.into(), message: format!("line {line}: {message}") };
        let mut header = None;
        let mut m = Manifest {
            header: Header {
                schema: SCHEMA,
                corpus_root: String::new(),
                stats: CorpusStats::default(),
                skipped: Vec::new(),
                dropped_cells: 0,
            },
            notebooks: Vec::new(),
            sequences: Vec::new(),
            vocab: None,
            analysis: Vec::new(),
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
            match record {
                Record::Header(h) => {
                    if i != 0 {
                        return Err(bad(i + 1, "header must be the first record".into()));
                    }
                    if h.schema != SCHEMA {
                        return Err(bad(i + 1, format!("unsupported schema {}", h.schema)));
                    }
                    header = Some(h);
                }
                Record::Notebook(n) => m.notebooks.push(n),
                Record::Sequence(s) => m.sequences.push(s),
                Record::Vocab { tokens } => m.vocab = Some(tokens),
                Record::Analysis(a) => m.analysis.push(a),
            }
        }
        m.header = header.ok_or_else(|| bad(1, "missing header record".into()))?;
        Ok(m)
    }
}

/// Writes `records` as JSON lines.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, records: impl IntoIterator<Item = T>) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
