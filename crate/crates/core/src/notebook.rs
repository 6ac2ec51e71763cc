use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub kind: CellKind,
    /// Source lines, each keeping its trailing newline except possibly the last.
    pub source: Vec<String>,
    pub has_stored_output: bool,
}

impl Cell {
    pub fn text(&self) -> String {
        self.source.concat()
    }

    pub fn is_code(&self) -> bool {
        self.kind == CellKind::Code
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notebook {
    pub id: String,
    pub source_path: String,
    pub cells: Vec<Cell>,
}

impl Notebook {
    /// Builds a notebook from plain code cells, as used for search queries.
    pub fn from_code_cells<S: AsRef<str>>(id: &str, cells: &[S]) -> Self {
        let cells = cells
            .iter()
            .enumerate()
            .map(|(index, src)| Cell {
                index,
                kind: CellKind::Code,
                source: split_lines(src.as_ref()),
                has_stored_output: false,
            })
            .collect();
        Notebook { id: id.into(), source_path: String::new(), cells }
    }

    pub fn code_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_code()).count()
    }

    pub fn markdown_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.kind == CellKind::Markdown).count()
    }
}

/// Splits text into lines that keep their `\n`, the nbformat convention for
/// list-valued `source` fields.
pub fn split_lines(text: &str) -> Vec<String> {
    text.split_inclusive('\n').map(String::from).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub notebook_count: usize,
    pub code_cell_count: usize,
    pub markdown_cell_count: usize,
    pub median_code_cells_per_notebook: f64,
}

impl CorpusStats {
    pub fn compute(notebooks: &[Notebook]) -> Self {
        let mut per_notebook: Vec<usize> = notebooks.iter().map(Notebook::code_cell_count).collect();
        per_notebook.sort_unstable();
        let median = match per_notebook.len() {
            0 => 0.0,
            n if n % 2 == 1 => per_notebook[n / 2] as f64,
            n => (per_notebook[n / 2 - 1] + per_notebook[n / 2]) as f64 / 2.0,
        };
        CorpusStats {
            notebook_count: notebooks.len(),
            code_cell_count: per_notebook.iter().sum(),
            markdown_cell_count: notebooks.iter().map(Notebook::markdown_cell_count).sum(),
            median_code_cells_per_notebook: median,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb(code: usize) -> Notebook {
        let cells: Vec<String> = (0..code).map(|i| alloc::format!("x{i} = {i}")).collect();
        Notebook::from_code_cells("n", &cells)
    }

    #[test]
    fn empty_corpus_stats_are_zero() {
        assert_eq!(CorpusStats::compute(&[]), CorpusStats::default());
    }

    #[test]
    fn median_of_odd_and_even_counts() {
        assert_eq!(CorpusStats::compute(&[nb(5), nb(5), nb(8)]).median_code_cells_per_notebook, 5.0);
        assert_eq!(CorpusStats::compute(&[nb(2), nb(5)]).median_code_cells_per_notebook, 3.5);
    }

    #[test]
    fn code_count_is_sum_over_notebooks() {
        let stats = CorpusStats::compute(&[nb(3), nb(4)]);
        assert_eq!(stats.code_cell_count, 7);
        assert_eq!(stats.notebook_count, 2);
    }

    #[test]
    fn split_keeps_newlines() {
        assert_eq!(split_lines("a\nb"), alloc::vec!["a\n".to_string(), "b".to_string()]);
        assert!(split_lines("").is_empty());
    }

    use alloc::string::ToString;
}
