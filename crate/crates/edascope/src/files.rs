//! Reading and writing the binary artifacts.
//!
//! An index is two files: the `EDAV` vectors at `<path>` and the metadata
//! at `<path>.meta.jsonl`, whose first line names the encoder.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use edascope_core::embedding::Encoder;
use edascope_core::index::{EntryMeta, SequenceIndex};
use edascope_core::recommend::RecommenderModel;
use edascope_core::topic::TopicModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::write_jsonl;

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_topics(path: &Path, model: &TopicModel) -> Result<()> {
    write_atomic(path, &model.to_bytes())
}

pub fn read_topics(path: &Path) -> Result<TopicModel> {
    Ok(TopicModel::from_bytes(&read(path)?)?)
}

pub fn write_encoder(path: &Path, encoder: &Encoder) -> Result<()> {
    write_atomic(path, &encoder.to_bytes())
}

pub fn read_encoder(path: &Path) -> Result<Encoder> {
    Ok(Encoder::from_bytes(&read(path)?)?)
}

pub fn write_recommender(path: &Path, model: &RecommenderModel) -> Result<()> {
    write_atomic(path, &model.to_bytes())
}

pub fn read_recommender(path: &Path) -> Result<RecommenderModel> {
    Ok(RecommenderModel::from_bytes(&read(path)?)?)
}

pub fn meta_path(index: &Path) -> PathBuf {
    let mut p = index.as_os_str().to_owned();
    p.push(".meta.jsonl");
    PathBuf::from(p)
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaHeader {
    schema: u32,
    encoder_id: String,
    dim: usize,
    entries: usize,
}

pub fn write_index(path: &Path, index: &SequenceIndex) -> Result<()> {
    let meta = meta_path(path);
    let mut buf = Vec::new();
    let header = MetaHeader {
        schema: crate::manifest::SCHEMA,
        encoder_id: index.encoder_id.clone(),
        dim: index.dim,
        entries: index.len(),
    };
    write_jsonl(&mut buf, [&header]).map_err(|e| Error::io(&meta, e))?;
    write_jsonl(&mut buf, index.entries.iter().map(|e| &e.meta)).map_err(|e| Error::io(&meta, e))?;
    write_atomic(&meta, &buf)?;
    write_atomic(path, &index.vector_bytes())
}

pub fn read_index(path: &Path) -> Result<SequenceIndex> {
    let meta = meta_path(path);
    let bad = |message: String| Error::Manifest { path: meta.clone(), message };
    let raw = read(&meta)?;
    let mut lines = raw.lines();
    let header: MetaHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line.map_err(|e| Error::io(&meta, e))?).map_err(|e| bad(e.to_string()))?,
        None => return Err(bad("empty metadata file".into())),
    };
    let mut metas = Vec::with_capacity(header.entries);
    for line in lines {
        let line = line.map_err(|e| Error::io(&meta, e))?;
        metas.push(serde_json::from_str::<EntryMeta>(&line).map_err(|e| bad(e.to_string()))?);
    }
    let index = SequenceIndex::from_parts(header.encoder_id, &read(path)?, metas)?;
    if index.dim != header.dim && !index.is_empty() {
        return Err(bad(format!("header says dimension {}, vectors have {}", header.dim, index.dim)));
    }
    Ok(SequenceIndex { dim: header.dim, ..index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use edascope_core::embedding::ImportedVectors;
    use edascope_core::index::{build_index, IndexItem};
    use edascope_core::sequence::EdaType;

    #[test]
    fn index_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let table = ImportedVectors::from_records(
            2,
            vec![("b".into(), vec![1.0, 0.0]), ("a".into(), vec![0.5, 0.5])],
        )
        .unwrap();
        let items: Vec<IndexItem> = ["a", "b"]
            .iter()
            .map(|id| IndexItem {
                meta: EntryMeta {
                    id: id.to_string(),
                    notebook_id: "n".into(),
                    block_count: 1,
                    eda_runs: vec![(EdaType::Modeling, 1)],
                    keywords: vec![("*.fit".into(), 0.25)],
                },
                blocks: vec![vec![0]],
            })
            .collect();
        let (index, _) = build_index(&items, &Encoder::Imported(table)).unwrap();
        let path = dir.path().join("idx.edav");
        write_index(&path, &index).unwrap();
        assert!(meta_path(&path).exists());
        assert_eq!(read_index(&path).unwrap(), index);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(read_index(&dir.path().join("none")).unwrap_err().code(), "IoError");
        assert_eq!(read_encoder(&dir.path().join("none")).unwrap_err().code(), "IoError");
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        std::fs::write(&p, b"NOPE\x01\x00").unwrap();
        assert_eq!(read_topics(&p).unwrap_err().code(), "FormatError");
        assert_eq!(read_recommender(&p).unwrap_err().code(), "FormatError");
        assert_eq!(read_encoder(&p).unwrap_err().code(), "FormatError");
    }
}
