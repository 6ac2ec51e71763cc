//! Recursive corpus scan.

use std::path::Path;

use edascope_core::notebook::{CorpusStats, Notebook};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::ipynb::parse_notebook;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: String,
    pub code: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    /// Ordered by relative path.
    pub notebooks: Vec<Notebook>,
    pub stats: CorpusStats,
    pub skipped: Vec<Skipped>,
    pub dropped_cells: usize,
}

/// Parses every `*.ipynb` under `root`. Files that fail to read or parse
/// are listed in `skipped`; only an unreadable root is an error.
pub fn scan_corpus(root: &Path) -> Result<Scan> {
    std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut notebooks = Vec::new();
    let mut skipped = Vec::new();
    let mut dropped_cells = 0;
    let walker = WalkDir::new(root).follow_links(true).sort_by_file_name();
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e.path().map(|p| relative(root, p)).unwrap_or_default();
                skipped.push(Skipped { path, code: "IoError".into(), reason: e.to_string() });
                continue;
            }
        };
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("ipynb") {
            continue;
        }
        let rel = relative(root, path);
        let parsed = std::fs::read(path).map_err(|e| Error::io(path, e)).and_then(|raw| parse_notebook(&raw, &rel));
        match parsed {
            Ok((nb, report)) => {
                dropped_cells += report.dropped_cells;
                notebooks.push(nb);
            }
            Err(e) => skipped.push(Skipped { path: rel, code: e.code().into(), reason: e.to_string() }),
        }
    }
    let stats = CorpusStats::compute(&notebooks);
    Ok(Scan { notebooks, stats, skipped, dropped_cells })
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let scan = scan_corpus(dir.path()).unwrap();
        assert!(scan.notebooks.is_empty() && scan.skipped.is_empty());
        assert_eq!(scan.stats, CorpusStats::default());
    }

    #[test]
    fn missing_root_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = scan_corpus(&dir.path().join("nope")).unwrap_err();
        assert_eq!(err.code(), "IoError");
    }

    #[test]
    fn corrupt_files_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.ipynb"), b"{\"cells\": [").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(
            dir.path().join("sub/good.ipynb"),
            br#"{"nbformat": 4, "nbformat_minor": 4, "metadata": {}, "cells": [{"cell_type": "code", "source": "x=1", "outputs": []}]}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
        let scan = scan_corpus(dir.path()).unwrap();
        assert_eq!(scan.notebooks.len(), 1);
        assert_eq!(scan.notebooks[0].source_path, "sub/good.ipynb");
        assert_eq!(scan.skipped.len(), 1);
        assert_eq!(scan.skipped[0].path, "bad.ipynb");
        assert_eq!(scan.skipped[0].code, "MalformedDocument");
    }
}
