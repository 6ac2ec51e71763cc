//! nbformat 4 reading and writing.

use edascope_core::notebook::{split_lines, Cell, CellKind, Notebook};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;

/// Counts of what normalization threw away.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Raw cells and cells of unknown type.
    pub dropped_cells: usize,
}

/// Stable notebook id: the first 16 hex digits of SHA-256 over the
/// `/`-separated relative path.
pub fn notebook_id(path: &str) -> String {
    let digest = Sha256::digest(path.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn parse_notebook(raw: &[u8], path: &str) -> Result<(Notebook, ParseReport), Error> {
    let doc: Value = serde_json::from_slice(raw).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    let obj = doc.as_object().ok_or_else(|| Error::MalformedDocument("top level is not an object".into()))?;
    match obj.get("nbformat").and_then(Value::as_i64) {
        Some(4) => {}
        Some(v) => return Err(Error::UnsupportedFormat(v)),
        None => return Err(Error::MalformedDocument("missing nbformat".into())),
    }
    let cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::MalformedDocument("missing cells array".into()))?;

    let mut report = ParseReport::default();
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let kind = match cell.get("cell_type").and_then(Value::as_str) {
            Some("code") => CellKind::Code,
            Some("markdown") => CellKind::Markdown,
            _ => {
                report.dropped_cells += 1;
                continue;
            }
        };
        let source = match cell.get("source") {
            Some(Value::String(s)) => split_lines(s),
            Some(Value::Array(parts)) => {
                let mut text = String::new();
                for p in parts {
                    text.push_str(p.as_str().ok_or_else(|| Error::MalformedDocument("non-string source line".into()))?);
                }
                split_lines(&text)
            }
            None | Some(Value::Null) => Vec::new(),
            Some(_) => return Err(Error::MalformedDocument("source is neither string nor list".into())),
        };
        let has_stored_output = kind == CellKind::Code
            && cell.get("outputs").and_then(Value::as_array).is_some_and(|o| !o.is_empty());
        out.push(Cell { index: out.len(), kind, source, has_stored_output });
    }
    Ok((Notebook { id: notebook_id(path), source_path: path.into(), cells: out }, report))
}

/// Serializes a notebook as nbformat 4. Stored outputs become a single
/// empty stream output, enough to round-trip the flag.
pub fn to_ipynb(notebook: &Notebook) -> Value {
    let cells: Vec<Value> = notebook
        .cells
        .iter()
        .map(|c| match c.kind {
            CellKind::Markdown => json!({"cell_type": "markdown", "metadata": {}, "source": c.source}),
            CellKind::Code => {
                let outputs: Vec<Value> = if c.has_stored_output {
                    vec![json!({"output_type": "stream", "name": "stdout", "text": []})]
                } else {
                    Vec::new()
                };
                json!({
                    "cell_type": "code",
                    "execution_count": null,
                    "metadata": {},
                    "outputs": outputs,
                    "source": c.source,
                })
            }
        })
        .collect();
    json!({
        "cells": cells,
        "metadata": {"kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"}},
        "nbformat": 4,
        "nbformat_minor": 5,
    })
}

pub fn to_ipynb_bytes(notebook: &Notebook) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&to_ipynb(notebook)).expect("JSON values always serialize");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(cells: Value) -> Vec<u8> {
        serde_json::to_vec(&json!({"nbformat": 4, "nbformat_minor": 2, "metadata": {}, "cells": cells})).unwrap()
    }

    #[test]
    fn one_code_cell() {
        let raw = doc(json!([{"cell_type": "code", "source": "x=1", "outputs": [], "metadata": {}}]));
        let (nb, report) = parse_notebook(&raw, "a.ipynb").unwrap();
        assert_eq!(nb.cells.len(), 1);
        assert_eq!(nb.cells[0].kind, CellKind::Code);
        assert_eq!(nb.cells[0].source, ["x=1"]);
        assert!(!nb.cells[0].has_stored_output);
        assert_eq!(report.dropped_cells, 0);
    }

    #[test]
    fn older_formats_are_rejected() {
        let raw = serde_json::to_vec(&json!({"nbformat": 3, "worksheets": []})).unwrap();
        assert!(matches!(parse_notebook(&raw, "old.ipynb"), Err(Error::UnsupportedFormat(3))));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_notebook(b"{not json", "x"), Err(Error::MalformedDocument(_))));
        let raw = serde_json::to_vec(&json!({"nbformat": 4})).unwrap();
        assert!(matches!(parse_notebook(&raw, "x"), Err(Error::MalformedDocument(_))));
        let raw = doc(json!([{"cell_type": "code", "source": 5}]));
        assert!(matches!(parse_notebook(&raw, "x"), Err(Error::MalformedDocument(_))));
    }

    #[test]
    fn raw_cells_are_dropped_and_counted() {
        let raw = doc(json!([
            {"cell_type": "raw", "source": "x"},
            {"cell_type": "markdown", "source": ["# t\n", "body"], "outputs": [1]},
            {"cell_type": "widget", "source": ""},
            {"cell_type": "code", "source": ["a = 1\n", "a"], "outputs": [{"output_type": "execute_result"}]},
        ]));
        let (nb, report) = parse_notebook(&raw, "x").unwrap();
        assert_eq!(report.dropped_cells, 2);
        let idx: Vec<usize> = nb.cells.iter().map(|c| c.index).collect();
        assert_eq!(idx, [0, 1]);
        assert!(!nb.cells[0].has_stored_output);
        assert!(nb.cells[1].has_stored_output);
        assert_eq!(nb.cells[1].source, ["a = 1\n", "a"]);
    }

    #[test]
    fn string_and_list_sources_agree() {
        let a = doc(json!([{"cell_type": "code", "source": "a\nb\n"}]));
        let b = doc(json!([{"cell_type": "code", "source": ["a\n", "b\n"]}]));
        assert_eq!(parse_notebook(&a, "p").unwrap().0, parse_notebook(&b, "p").unwrap().0);
    }

    #[test]
    fn ids_follow_the_path() {
        assert_eq!(notebook_id("a/b.ipynb"), notebook_id("a/b.ipynb"));
        assert_ne!(notebook_id("a/b.ipynb"), notebook_id("a/c.ipynb"));
        assert_eq!(notebook_id("x").len(), 16);
    }

    #[test]
    fn normalization_is_idempotent() {
        let raw = doc(json!([
            {"cell_type": "markdown", "source": "# h"},
            {"cell_type": "code", "source": "x = 1\nx", "outputs": [{"output_type": "execute_result"}]},
            {"cell_type": "code", "source": ["y = 2"], "outputs": []},
        ]));
        let (first, _) = parse_notebook(&raw, "n.ipynb").unwrap();
        let (second, _) = parse_notebook(&to_ipynb_bytes(&first), "n.ipynb").unwrap();
        assert_eq!(first, second);
    }
}
